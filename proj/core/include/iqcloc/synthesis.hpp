#pragma once

#include "iqcloc/analysis.hpp"
#include "iqcloc/conic.hpp"
#include "iqcloc/lti.hpp"
#include "iqcloc/multiplier.hpp"

#include <functional>

namespace iqcloc {

struct SynthesisOptions {
    conic::SolveOptions solver;
    // Bound on ||[Ac Bc; Cc Dc]||_2 during controller recovery.
    double gain_cap = 1e4;
    // Controllers are recovered at gamma* (1 + recover_margin).
    double recover_margin = 0.05;
    // Bisection tolerance, relative to max(1, hi).
    double bisect_tol = 1e-3;
    int monotone_points = 21;
    // After the feasibility solve, minimize tr(Q1 + Q2) at half the achieved
    // margin so that the reconstructed storage is well conditioned.
    bool refine_certificate = true;
};

// Elimination-lemma certificate: Q2 is the plant block of the closed-loop
// storage P and Q1 the plant block of P^{-1}; [Q1 I; I Q2] >= 0.
struct EliminationCertificate {
    Mat Q1, Q2;
};

// X with X22 shifted by -delta I when X is numerically singular. Throws
// SingularMultiplier if the shifted matrix is still singular.
Multiplier regularize_multiplier(const Multiplier& x);

// Throws Infeasible when no output-feedback controller of order n renders
// the closed loop dissipative with respect to X.
EliminationCertificate synthesis_feasible(const StateSpace& plant, const Multiplier& x,
                                          const SynthesisOptions& opts = {});

// Solves [Q1 R2; I 0] P = [I 0; Q2 R1] with R1 R2^T = I - Q2 Q1 from a balanced
// SVD split.
// Throws SingularCoupling when I - Q2 Q1 is numerically singular.
Mat reconstruct_P(const Mat& q1, const Mat& q2);
// Same system for a caller-supplied split.
Mat reconstruct_P(const Mat& q1, const Mat& q2, const Mat& r1, const Mat& r2);

// Full-order controller making dissipation_lmi(close_loop(plant, K), X, P)
// negative semidefinite. Throws Infeasible.
Controller recover_controller(const StateSpace& plant, const Multiplier& x, const Mat& p,
                              const SynthesisOptions& opts = {});

struct BisectionResult {
    double gamma = 0.0;
    int iterations = 0;
};

// Smallest gamma in [lo, hi] (to tol) with feasible(gamma) true, assuming
// monotone feasibility. Throws InfeasibleAtHi.
BisectionResult bisect(double lo, double hi, double tol, const std::function<bool(double)>& feasible);

// Bisection over synthesis_feasible at eval(Q, gamma). Checks monotonicity of
// Q on the interval first (NonMonotone).
BisectionResult bisect_gamma(const StateSpace& plant, const QuadMultiplier& q, double lo, double hi,
                             const SynthesisOptions& opts = {});
// Bisection over iqc_analysis of a fixed closed loop.
BisectionResult bisect_gamma(const ClosedLoop& sys, const QuadMultiplier& q, double lo, double hi,
                             const SynthesisOptions& opts = {});

// Default interval: [0, 10 * open-loop gain] when A is Hurwitz, else [0, 1e4].
std::pair<double, double> default_gamma_interval(const StateSpace& plant);

struct SynthesisResult {
    double gamma_star = 0.0;
    // Level at which the controller was recovered.
    double gamma = 0.0;
    EliminationCertificate elimination;
    Mat P;
    Controller controller;
    StorageCertificate cert;
};

// Bisection, storage reconstruction and controller recovery.
SynthesisResult synthesize(const StateSpace& plant, const QuadMultiplier& q, double lo, double hi,
                           const SynthesisOptions& opts = {});

}  // namespace iqcloc
