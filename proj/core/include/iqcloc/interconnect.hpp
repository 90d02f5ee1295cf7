#pragma once

// Static interconnection [v; z] = M [y; w] of N subsystems with ports
// (v_i, y_i), and the global admissibility tests relating local supply rates
// X_i on (v_i, y_i) to a global supply rate W on (w, z).

#include "iqcloc/conic.hpp"
#include "iqcloc/lti.hpp"
#include "iqcloc/multiplier.hpp"

#include <vector>

namespace iqcloc {

struct Interconnection {
    Mat M11;  // n_v x n_y
    Mat M12;  // n_v x n_w
    Mat M21;  // n_z x n_y
    Mat M22;  // n_z x n_w
    std::vector<int> nv_parts;
    std::vector<int> ny_parts;

    int count() const { return static_cast<int>(nv_parts.size()); }
    int n_v() const { return static_cast<int>(M11.rows()); }
    int n_y() const { return static_cast<int>(M11.cols()); }
    int n_w() const { return static_cast<int>(M12.cols()); }
    int n_z() const { return static_cast<int>(M21.rows()); }
    // n_{v,i} + n_{y,i}
    int port_dim(int i) const { return nv_parts[i] + ny_parts[i]; }
    int total_port_dim() const { return n_v() + n_y(); }
    int v_offset(int i) const;
    int y_offset(int i) const;

    Mat matrix() const;
    // Throws DimensionMismatch on inconsistent blocks or partitions.
    void check() const;
    bool well_posed() const;

    // Single subsystem, v = w, z = y.
    static Interconnection identity(int n_in, int n_out);
};

using LocalProblemSet = std::vector<QuadMultiplier>;

// Permutation T with T^T blkdiag(X_1, ..., X_N) T expressed in (v, y) port
// order, where each X_i is in (v_i, y_i) order.
Mat port_permutation(const Interconnection& m);

// [X^11 X^12; X^12^T X^22] in (v, y) order, X^jk = blkdiag_i X_i^jk.
Mat stack_ports(const Interconnection& m, const std::vector<Mat>& xs);

// [M; I]^T blkmid(X^11, -W22, X^12, -W12^T, X^22, -W11) [M; I], size n_y + n_w,
// rows ordered (y, w). Admissible at these multipliers iff NSD.
Mat gac_matrix(const Interconnection& m, const std::vector<Multiplier>& xs, const Multiplier& w);

// Same matrix for a stacked local multiplier expression in (v, y) order and a
// global multiplier expression in (w, z) order.
conic::Affine gac_matrix(const Interconnection& m, const conic::Affine& x_stacked, const conic::Affine& w);

// Reduced 2x2-block form in (w, y) order. Throws NotWellPosed. Its NSD verdict
// matches gac_matrix when M11 and M22 vanish; with nonzero M11 or M22 the two
// can disagree.
Mat gac_wellposed(const Interconnection& m, const std::vector<Multiplier>& xs, const Multiplier& w);

// Q1 = I2 (x) [M12 M11; 0 I] and Q2 = I2 (x) [I 0; M22 M21], columns (w, y).
Mat gac_q1(const Interconnection& m);
Mat gac_q2(const Interconnection& m);

// Y_L in (v, y) order: [C(X1) C(X2); C(X2) C(X3)], C = stack_ports.
Mat local_lift(const Interconnection& m, const LocalProblemSet& qs);
// [W1 W2; W2 W3]
Mat global_lift(const QuadMultiplier& wq);

// Q1^T Y_L Q1 - Q2^T Y_G Q2. NSD implies admissibility for every gamma.
Mat gac_quadratic(const Interconnection& m, const LocalProblemSet& qs, const QuadMultiplier& wq);
Mat gac_quadratic(const Interconnection& m, const Mat& y_local, const QuadMultiplier& wq);
conic::Affine gac_quadratic(const Interconnection& m, const conic::Affine& y_local, const QuadMultiplier& wq);

// Structured parametrization: X_i(g) = [g^2 A + Abar, 2g B + Bbar; *, Cbar],
// i.e. X1 has only the input block and X2 only the cross block. Returns the
// lifted matrix S with [gI; I]^T S [gI; I] equal to the reduced form at g.
// Requires M11 = 0 and M22 = 0 (where the reduced form is exact) and a
// well-posed M. Throws InvalidArgument for multipliers outside the structure.
Mat gac_structured(const Interconnection& m, const LocalProblemSet& qs, const QuadMultiplier& wq);
bool is_structured(const QuadMultiplier& q, double tol = 0.0);

enum class GacMode { Quadratic, Structured };

struct AdmissibilityReport {
    bool admissible = false;
    GacMode mode = GacMode::Quadratic;
    // Largest eigenvalue of the tested matrix.
    double lambda_max = 0.0;
    // Set when the verdict was additionally sampled on a gamma grid.
    int grid_points = 0;
    bool grid_ok = true;
};

// grid_points > 0 also evaluates gac_matrix at that many gamma values in
// [grid_lo, grid_hi].
AdmissibilityReport check_admissible(const Interconnection& m, const LocalProblemSet& qs,
                                     const QuadMultiplier& wq, GacMode mode = GacMode::Quadratic,
                                     double feas_tol = 1e-7, int grid_points = 0, double grid_lo = 0.0,
                                     double grid_hi = 10.0);

// Closed loop from w to z of the subsystems (v_i -> y_i) wired by m. Throws
// DimensionMismatch, NotWellPosed when I - D M11 is singular.
ClosedLoop compose(const Interconnection& m, const std::vector<ClosedLoop>& parts);

// True iff M12 (M12^T M12)^-1 M21 is block diagonal per port partition.
// Throws NotWellPosed, DimensionMismatch when n_w != n_z.
bool passivable(const Interconnection& m, double bd_tol = 1e-9);

}  // namespace iqcloc
