#include "source.hpp"

#include "iqcloc/error.hpp"

#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace iqcloc::cli {

namespace {

// Character iterator that publishes how far the parser has read.
class CountingIterator {
public:
    using iterator_category = std::forward_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    CountingIterator() = default;
    CountingIterator(const char* p, const char* base, std::size_t* consumed) : p_(p), base_(base), consumed_(consumed) {}

    reference operator*() const { return *p_; }
    CountingIterator& operator++() {
        ++p_;
        if (consumed_) *consumed_ = static_cast<std::size_t>(p_ - base_);
        return *this;
    }
    CountingIterator operator++(int) {
        CountingIterator old = *this;
        ++*this;
        return old;
    }
    bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_ = nullptr;
    const char* base_ = nullptr;
    std::size_t* consumed_ = nullptr;
};

// Builds the DOM and records where each value was read.
class LocatingSax {
public:
    using number_integer_t = json::number_integer_t;
    using number_unsigned_t = json::number_unsigned_t;
    using number_float_t = json::number_float_t;
    using string_t = json::string_t;
    using binary_t = json::binary_t;

    LocatingSax(json& root, const std::size_t& consumed, std::map<std::string, std::size_t>& offsets)
        : dom_(root, true), consumed_(consumed), offsets_(offsets) {}

    bool null() { return scalar([&] { return dom_.null(); }); }
    bool boolean(bool v) { return scalar([&] { return dom_.boolean(v); }); }
    bool number_integer(number_integer_t v) { return scalar([&] { return dom_.number_integer(v); }); }
    bool number_unsigned(number_unsigned_t v) { return scalar([&] { return dom_.number_unsigned(v); }); }
    bool number_float(number_float_t v, const string_t& s) { return scalar([&] { return dom_.number_float(v, s); }); }
    bool string(string_t& v) { return scalar([&] { return dom_.string(v); }); }
    bool binary(binary_t& v) { return scalar([&] { return dom_.binary(v); }); }

    bool start_object(std::size_t n) {
        open(false);
        return dom_.start_object(n);
    }
    bool end_object() {
        close();
        return dom_.end_object();
    }
    bool start_array(std::size_t n) {
        open(true);
        return dom_.start_array(n);
    }
    bool end_array() {
        close();
        return dom_.end_array();
    }
    bool key(string_t& k) {
        frames_.back().key = k;
        return dom_.key(k);
    }
    bool parse_error(std::size_t pos, const std::string& token, const nlohmann::detail::exception& ex) {
        return dom_.parse_error(pos, token, ex);
    }

private:
    struct Frame {
        std::string pointer;
        bool array;
        std::size_t index = 0;
        std::string key;
    };

    std::string next_pointer() const {
        if (frames_.empty()) return "";
        const Frame& f = frames_.back();
        return f.array ? child(f.pointer, f.index) : child(f.pointer, f.key);
    }
    void record(const std::string& ptr) {
        // Last character read: the opening bracket of containers, the closing
        // quote of strings, one past the end of numbers and literals.
        offsets_.emplace(ptr, consumed_ > 0 ? consumed_ - 1 : 0);
    }
    void advance() {
        if (!frames_.empty() && frames_.back().array) ++frames_.back().index;
    }
    template <class F>
    bool scalar(F&& f) {
        record(next_pointer());
        const bool ok = f();
        advance();
        return ok;
    }
    void open(bool array) {
        const std::string ptr = next_pointer();
        record(ptr);
        frames_.push_back({ptr, array, 0, {}});
    }
    void close() {
        frames_.pop_back();
        advance();
    }

    nlohmann::detail::json_sax_dom_parser<json> dom_;
    const std::size_t& consumed_;
    std::map<std::string, std::size_t>& offsets_;
    std::vector<Frame> frames_;
};

std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
        if (c == '~')
            out += "~0";
        else if (c == '/')
            out += "~1";
        else
            out += c;
    }
    return out;
}

}  // namespace

std::string child(const std::string& pointer, const std::string& key) { return pointer + "/" + escape(key); }
std::string child(const std::string& pointer, std::size_t index) { return pointer + "/" + std::to_string(index); }

Source Source::parse(const std::string& text, const std::string& name) {
    Source src;
    src.name_ = name;
    src.text_ = text;
    std::size_t consumed = 0;
    const char* base = src.text_.data();
    LocatingSax sax(src.root_, consumed, src.offsets_);
    try {
        json::sax_parse(CountingIterator(base, base, &consumed),
                        CountingIterator(base + src.text_.size(), base, &consumed), &sax);
    } catch (const json::exception& e) {
        fail(ErrorKind::ParseError, name + ": " + e.what());
    }
    return src;
}

Source Source::read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::ParseError, path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

std::string Source::where(const std::string& pointer) const {
    std::string p = pointer;
    for (;;) {
        const auto it = offsets_.find(p);
        if (it != offsets_.end()) {
            std::size_t line = 1, col = 1;
            for (std::size_t k = 0; k < it->second && k < text_.size(); ++k) {
                if (text_[k] == '\n') {
                    ++line;
                    col = 1;
                } else {
                    ++col;
                }
            }
            return name_ + ":" + std::to_string(line) + ":" + std::to_string(col);
        }
        if (p.empty()) return name_;
        p = p.substr(0, p.rfind('/'));
    }
}

}  // namespace iqcloc::cli
