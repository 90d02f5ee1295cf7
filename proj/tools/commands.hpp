#pragma once

// Command dispatch and report emission for the iqcloc tool.

#include "problem.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iqcloc::cli {

// Command line values; each set field overrides the problem file.
struct Flags {
    std::optional<double> tol;
    std::optional<double> gamma_lo;
    std::optional<double> gamma_hi;
    std::optional<int> max_iter;
    std::optional<unsigned> seed;
    std::optional<int> grid;
    std::optional<std::string> mode;
};

enum class Exit { Success = 0, Error = 1, Negative = 2 };

struct Outcome {
    json report;
    Exit exit = Exit::Success;
};

const std::vector<std::string>& command_names();

// Runs one command on a parsed input (a problem file, or a report for
// validate). Infeasible answers become a report with exit code 2; input and
// numerical errors propagate as iqcloc::Error.
Outcome run(const std::string& command, const Source& input, const Flags& flags);

// Tolerance applied when replaying dissipation inequalities on simulated
// trajectories.
inline constexpr double kReplayTol = 1e-5;

}  // namespace iqcloc::cli
