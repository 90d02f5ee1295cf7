#pragma once

// Relaxed global problem solved by a Gauss-Seidel ADMM sweep over consensus
// copies Z_i, local copies X_i and scaled duals V_i:
//   1. Z <- argmin g + rho sum |X_i - Z_i + V_i|_F^2  s.t. gac_matrix(Z, W(g)) <= 0,
//      Z^11 >= 0, Z^22 <= 0, with g = gamma^2
//   2. X_i <- argmin |X_i - Z_i + V_i|_F^2  s.t. subsystem i satisfies X_i
//   3. V_i <- V_i + X_i - Z_i

#include "iqcloc/analysis.hpp"
#include "iqcloc/interconnect.hpp"
#include "iqcloc/lti.hpp"
#include "iqcloc/multiplier.hpp"

#include <vector>

namespace iqcloc {

struct AdmmOptions {
    conic::SolveOptions solver;
    double rho = 1.0;
    int max_iter = 500;
    // Stop when primal_res <= res_tol (1 + |Z|_F) and dual_res <= res_tol.
    // With relative_stop off the primal test is absolute.
    double res_tol = 1e-4;
    bool relative_stop = true;
    // Solve the per-subsystem X-steps on separate threads.
    bool parallel = true;
    // Each subsystem must satisfy the L2 multiplier at this level (seed check).
    double seed_gamma = 1e3;
    // Upper end of the certified-gamma bisection.
    double gamma_hi = 1e3;
};

struct AdmmState {
    std::vector<Multiplier> Z, X, V;
    // Level from the last Z-step.
    double gamma = 0.0;
    int iter = 0;
    // sum_i |X_i - Z_i|_F and sum_i |Z_i - Z_i^prev|_F.
    double primal_res = 0.0;
    double dual_res = 0.0;
    std::vector<double> primal_trace, dual_trace, gamma_trace;
};

enum class AdmmStatus { Converged, MaxIter };

struct AdmmResult {
    AdmmStatus status = AdmmStatus::MaxIter;
    // Local copies X_i of the last iterate.
    std::vector<Multiplier> multipliers;
    // Smallest gamma with gac_matrix(X, W(gamma)) <= 0; infinite when none up
    // to gamma_hi.
    double gamma = 0.0;
    std::vector<StorageCertificate> certificates;
    AdmmState state;
};

// One X-step: the multiplier closest to target for which the performance
// channel of plant admits a storage function. Throws Infeasible.
StorageCertificate admm_local_step(const StateSpace& plant, const Multiplier& target,
                                   const conic::SolveOptions& solver = {});

// Requires W2 = 0 (InvalidArgument) and one plant per subsystem whose
// performance channel matches the port partition (DimensionMismatch). Throws
// SeedInfeasible when a subsystem fails the seed check. Running out of
// iterations is reported through AdmmResult::status with the last iterate.
AdmmResult admm_solve(const Interconnection& m, const QuadMultiplier& wq, const std::vector<StateSpace>& plants,
                      const AdmmOptions& opts = {});

}  // namespace iqcloc
