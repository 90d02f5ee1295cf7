#pragma once

// JSON documents with source locations for every value, so that semantic
// errors can point at the offending line and column.

#include <json.hpp>

#include <map>
#include <string>

namespace iqcloc::cli {

using json = nlohmann::ordered_json;

class Source {
public:
    // Throws Error{ParseError} with line and column on malformed JSON.
    static Source parse(const std::string& text, const std::string& name);
    static Source read_file(const std::string& path);

    const json& root() const { return root_; }
    const std::string& name() const { return name_; }
    // "name:line:col" of the value at a JSON pointer, or of its closest
    // recorded ancestor.
    std::string where(const std::string& pointer) const;

private:
    std::string name_;
    std::string text_;
    json root_;
    std::map<std::string, std::size_t> offsets_;
};

std::string child(const std::string& pointer, const std::string& key);
std::string child(const std::string& pointer, std::size_t index);

}  // namespace iqcloc::cli
