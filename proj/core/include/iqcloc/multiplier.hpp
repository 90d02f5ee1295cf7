#pragma once

#include "iqcloc/matrixcore.hpp"

namespace iqcloc {

// Static supply rate [X11 X12; X12^T X22] over an (input, output) port pair.
class Multiplier {
public:
    Multiplier() = default;
    // Throws DimensionMismatch on a non-square or wrongly partitioned matrix and
    // InvalidArgument when x is not symmetric within tol::sym. The stored matrix
    // is the symmetric part of x.
    Multiplier(const Mat& x, int n_in);
    static Multiplier from_blocks(const Mat& x11, const Mat& x12, const Mat& x22);

    int n_in() const { return n_in_; }
    int n_out() const { return static_cast<int>(x_.rows()) - n_in_; }
    int dim() const { return static_cast<int>(x_.rows()); }
    const Mat& matrix() const { return x_; }

    Mat x11() const { return x_.topLeftCorner(n_in_, n_in_); }
    Mat x12() const { return x_.topRightCorner(n_in_, n_out()); }
    Mat x22() const { return x_.bottomRightCorner(n_out(), n_out()); }

    Multiplier scaled(double alpha) const { return Multiplier(alpha * x_, n_in_); }

private:
    Mat x_;
    int n_in_ = 0;
};

// X(gamma) = gamma^2 X1 + 2 gamma X2 + X3, all three sharing one partition.
struct QuadMultiplier {
    Mat X1, X2, X3;
    int n_in = 0;

    int dim() const { return static_cast<int>(X1.rows()); }
    int n_out() const { return dim() - n_in; }
    // Validates shapes and symmetry.
    void check() const;
};

Multiplier eval(const QuadMultiplier& q, double gamma);

// [0 I; I -eps I]
Multiplier passivity_multiplier(int n, double epsilon);

// X1 = diag(I, 0), X2 = 0, X3 = diag(0, -I): X(gamma) bounds the L2 gain by gamma.
QuadMultiplier l2gain_quad(int n_in, int n_out);

// Samples gamma on `points` equally spaced values of [lo, hi] and checks
// X(g_k) - X(g_{k+1}) <= tol for consecutive samples.
bool is_monotone_on(const QuadMultiplier& q, double lo, double hi, int points = 21, double tol = 1e-9);

struct StabilityCertificate {
    double pi11 = 0.0;
    double pi12 = 0.0;
    // Smallest curvature of the output block, lambda_min(-X22).
    double pi22 = 0.0;
    double epsilon = 0.0;
    // Energy gain bound ||Delta(w)||^2 <= c ||w||^2.
    double c = 0.0;
};

// Requires X11 >= 0 and X22 < 0. Throws NotStabilityMultiplier otherwise,
// including when X22 is singular (no output energy bound follows).
StabilityCertificate check_stability_multiplier(const Multiplier& x, double tol = 1e-9);

}  // namespace iqcloc
