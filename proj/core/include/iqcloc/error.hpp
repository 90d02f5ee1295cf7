#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iqcloc {

// Every failure raised by the library carries one of these kinds so that
// callers (the CLI in particular) can map it onto an exit status without
// parsing messages.
enum class ErrorKind {
    DimensionMismatch,
    RankDeficient,
    InvalidArgument,
    NotStabilityMultiplier,
    SingularMultiplier,
    SingularCoupling,
    Infeasible,
    InfeasibleAtHi,
    NonMonotone,
    NotWellPosed,
    NotALocalization,
    NegativeGapSquared,
    NotEquivalence,
    SeedInfeasible,
    MaxIter,
    Unstable,
    Unbounded,
    NumericalFailure,
    ParseError,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    // True for errors that are a valid mathematical answer ("no such
    // certificate exists") rather than a malfunction.
    bool is_infeasibility() const noexcept {
        return kind_ == ErrorKind::Infeasible || kind_ == ErrorKind::InfeasibleAtHi ||
               kind_ == ErrorKind::SeedInfeasible;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

}  // namespace iqcloc
