#pragma once

#include "iqcloc/conic.hpp"
#include "iqcloc/lti.hpp"
#include "iqcloc/multiplier.hpp"

namespace iqcloc {

// Quadratic storage V(x) = x^T P x certifying that the closed loop satisfies
// the supply rate `multiplier` on (v, y).
struct StorageCertificate {
    Mat P;
    Multiplier multiplier;
    // Largest eigenvalue of the dissipation LMI at P (<= 0 when exact).
    double feas_residual = 0.0;
};

struct AnalysisOptions {
    conic::SolveOptions solver;
    // Lower bound P >= p_min I. Zero means P is only required to be PSD.
    double p_min = 0.0;
};

// [A^T P + P A, P B; B^T P, 0] - [0 I; C D]^T X [0 I; C D], in (x, v) coordinates.
Mat dissipation_lmi(const ClosedLoop& sys, const Multiplier& x, const Mat& p);
conic::Affine dissipation_lmi(const ClosedLoop& sys, const conic::Affine& x, const conic::Affine& p);

// Finds P >= 0 with dissipation_lmi <= 0. Throws Infeasible.
StorageCertificate iqc_analysis(const ClosedLoop& sys, const Multiplier& x, const AnalysisOptions& opts = {});

// Same LMI plus the output bound lambda C^T C <= beta^2 P.
StorageCertificate iqc_analysis_output_bound(const ClosedLoop& sys, const Multiplier& x, double beta,
                                             double lambda = 1.0, const AnalysisOptions& opts = {});

struct ReachabilityCertificate {
    StorageCertificate storage;
    // x(t) stays in {x : x^T P x <= level} for unit-energy inputs started at
    // V(x0) <= beta.
    double level = 0.0;
};

// [A^T P + P A, P B; B^T P, -I] <= 0 with P >= p_min I, p_min >= 1e-6.
ReachabilityCertificate reachability_certificate(const ClosedLoop& sys, double beta,
                                                 const AnalysisOptions& opts = {});

// max over the simulated trajectory of d/dt(x^T P x) - [v; y]^T X [v; y],
// with the derivative taken from the state equation.
double dissipation_residual(const ClosedLoop& sys, const StorageCertificate& cert, const Signal& input);

}  // namespace iqcloc
