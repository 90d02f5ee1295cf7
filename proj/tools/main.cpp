#include "commands.hpp"

#include "iqcloc/error.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    using namespace iqcloc::cli;
    CLI::App app{"Certify and synthesize interconnected LTI systems by localizing supply rates"};
    std::string command, path, output;
    double tol = 0.0, gamma_lo = 0.0, gamma_hi = 0.0;
    int max_iter = 0, grid = 0;
    unsigned seed = 0;
    std::string mode;
    app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(command_names()));
    app.add_option("input", path, "Problem file, or a report for validate")->required()->check(CLI::ExistingFile);
    auto* o_tol = app.add_option("--tol", tol, "Feasibility tolerance of admissibility and replay checks");
    auto* o_lo = app.add_option("--gamma-lo", gamma_lo, "Lower end of the gamma interval");
    auto* o_hi = app.add_option("--gamma-hi", gamma_hi, "Upper end of the gamma interval");
    auto* o_iter = app.add_option("--max-iter", max_iter, "Iteration cap for admm and group")->check(CLI::PositiveNumber);
    auto* o_seed = app.add_option("--seed", seed, "Seed of the randomized replay inputs");
    auto* o_grid = app.add_option("--grid", grid, "Number of gamma samples for the admissible command")
                       ->check(CLI::NonNegativeNumber);
    auto* o_mode = app.add_option("--mode", mode, "Localization structure")
                       ->check(CLI::IsMember({"blockdiag", "fullblock"}));
    app.add_option("-o,--output", output, "Write the report here instead of stdout");
    CLI11_PARSE(app, argc, argv);

    Flags flags;
    if (*o_tol) flags.tol = tol;
    if (*o_lo) flags.gamma_lo = gamma_lo;
    if (*o_hi) flags.gamma_hi = gamma_hi;
    if (*o_iter) flags.max_iter = max_iter;
    if (*o_seed) flags.seed = seed;
    if (*o_grid) flags.grid = grid;
    if (*o_mode) flags.mode = mode;

    try {
        const Outcome out = run(command, Source::read_file(path), flags);
        const std::string text = out.report.dump(2) + "\n";
        if (output.empty()) {
            std::cout << text;
        } else {
            std::ofstream f(output, std::ios::binary);
            if (!f) {
                std::cerr << "iqcloc: cannot write " << output << "\n";
                return static_cast<int>(Exit::Error);
            }
            f << text;
        }
        std::cerr << "iqcloc: " << command << ": " << out.report["status"].get<std::string>() << "\n";
        return static_cast<int>(out.exit);
    } catch (const iqcloc::Error& e) {
        std::cerr << "iqcloc: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "iqcloc: " << e.what() << "\n";
    }
    return static_cast<int>(Exit::Error);
}
