#pragma once

// Problem files and the JSON encoding of the library's types.

#include "source.hpp"

#include "iqcloc/error.hpp"
#include "iqcloc/interconnect.hpp"
#include "iqcloc/lti.hpp"
#include "iqcloc/multiplier.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iqcloc::cli {

struct Subsystem {
    std::string name;
    StateSpace plant;
    // Local objective for analyze and synthesize; L2 gain when absent.
    std::optional<QuadMultiplier> objective;
    // Local supply rate for the admissible command.
    std::optional<QuadMultiplier> multiplier;
};

struct Options {
    double tol = 1e-7;
    double gamma_lo = 0.0;
    std::optional<double> gamma_hi;
    std::optional<int> max_iter;
    double res_tol = 1e-4;
    double rho = 1.0;
    std::string mode = "blockdiag";
    int ng = 0;
    int nbar = 0;
    unsigned seed = 0;
    int grid = 0;
    // Margin of the passivity preset.
    double epsilon = 0.0;
};

struct Problem {
    std::vector<Subsystem> subsystems;
    std::optional<Interconnection> interconnection;
    std::optional<QuadMultiplier> global_objective;
    Options options;
};

// Throws Error{ParseError} for structural problems (unknown keys, wrong
// types, ragged rows) and Error{DimensionMismatch} for matrices that do not
// match the declared dimensions; both messages carry file:line:col.
Problem parse_problem(const Source& src);

// Reads a matrix stored as nested row arrays with the expected shape.
class Reader {
public:
    explicit Reader(const Source& src) : src_(src) {}

    const Source& source() const { return src_; }
    [[noreturn]] void error(ErrorKind kind, const std::string& pointer, const std::string& msg) const;
    void only_keys(const json& obj, const std::string& pointer, std::initializer_list<const char*> keys) const;
    const json& object(const json& parent, const std::string& pointer, const char* key) const;
    const json* optional(const json& obj, const char* key) const;
    double number(const json& v, const std::string& pointer) const;
    int count(const json& v, const std::string& pointer) const;
    std::string text(const json& v, const std::string& pointer) const;
    Mat matrix(const json& v, const std::string& pointer) const;
    // Shape-checked; the name appears in DimensionMismatch messages.
    Mat matrix(const json& v, const std::string& pointer, int rows, int cols, const std::string& name) const;
    std::vector<int> counts(const json& v, const std::string& pointer) const;
    QuadMultiplier quad(const json& v, const std::string& pointer, int n_in, int n_out, const std::string& name,
                        double epsilon) const;
    Interconnection interconnection(const json& v, const std::string& pointer) const;

private:
    const Source& src_;
};

json to_json(const Mat& m);
json to_json(const QuadMultiplier& q);
json to_json(const Multiplier& x);
json to_json(const ClosedLoop& sys);
json to_json(const Interconnection& m);
json to_json(const Controller& k);

}  // namespace iqcloc::cli
