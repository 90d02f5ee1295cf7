#pragma once

// Localizations: local quadratic supply rates X_i(gamma) that pass the lifted
// admissibility test for a global W(gamma), and the closest one.

#include "iqcloc/conic.hpp"
#include "iqcloc/interconnect.hpp"

#include <vector>

namespace iqcloc {

// Quadratic multiplier over all subsystem ports in subsystem order
// (v_1, y_1, ..., v_N, y_N). Block (i, j) couples subsystems i and j;
// a block-diagonal joint multiplier is an ordinary local problem set.
struct JointMultiplier {
    Mat X1, X2, X3;
};

JointMultiplier joint(const LocalProblemSet& qs);
LocalProblemSet diagonal_blocks(const Interconnection& m, const JointMultiplier& x);
// Y_L of a joint multiplier in (v, y) order.
Mat local_lift(const Interconnection& m, const JointMultiplier& x);

enum class StructureMode { BlockDiagonal, FullBlock };

// Dominant: maximize lambda_min(Q1^T Y_L Q1), then minimize the distance
// among the maximizers. Distance: minimize the distance only.
enum class ClosestObjective { Dominant, Distance };

// Bound on a diagonal port block of one coefficient: block <= level I when
// upper, block >= level I otherwise.
struct BlockBound {
    int subsystem = 0;
    int coefficient = 1;  // 1, 2 or 3 for X1, X2, X3
    bool input_block = true;
    bool upper = true;
    double level = 0.0;
};

struct LocalizationOptions {
    conic::SolveOptions solver;
    StructureMode mode = StructureMode::BlockDiagonal;
    ClosestObjective objective = ClosestObjective::Dominant;
    // N x N 0/1 mask of coupled subsystem pairs in full-block mode. Empty
    // means all pairs.
    Mat pattern;
    std::vector<BlockBound> bounds;
    // Lifted sign pattern: [X1 X2; X2 X3] restricted to the input ports is PSD
    // and restricted to the output ports is NSD, so X^11(g) >= 0 and
    // X^22(g) <= 0 for every g.
    bool sign_constraints = true;
    double exact_tol = 1e-6;
    // Admissibility is imposed as G <= relax * max(1, |Y_G|) I. L2 and
    // passivity objectives admit no strictly admissible point (the gamma^0
    // input block of W vanishes), so an exact G <= 0 has an empty interior.
    double relax = 1e-8;
};

struct Localization {
    LocalProblemSet multipliers;  // diagonal blocks
    JointMultiplier joint;
    // sigma_max of the admissibility matrix.
    double distance = 0.0;
    bool exact = false;
    // lambda_min(Q1^T Y_L Q1).
    double t_star = 0.0;
};

// Throws NotALocalization when the admissibility matrix is not NSD within
// feas_tol.
double localization_distance(const Interconnection& m, const LocalProblemSet& xs, const QuadMultiplier& wq,
                             double feas_tol = 1e-7);

// Wraps a given admissible set. Throws NotALocalization.
Localization make_localization(const Interconnection& m, const JointMultiplier& x, const QuadMultiplier& wq,
                               double feas_tol = 1e-7, double exact_tol = 1e-6);

// Dominant objective: maximizes t with t I <= Q1^T Y_L Q1 subject to
// admissibility, then among the maximizers minimizes the distance. Throws
// Infeasible.
Localization closest_localization(const Interconnection& m, const QuadMultiplier& wq,
                                  const LocalizationOptions& opts = {});

// Input (inputs = true) or output rows and columns of both halves of Y_L.
conic::Affine lifted_port_block(const Interconnection& m, const conic::Affine& y_local, bool inputs);

// sqrt(gamma_L^2 - gamma_G^2). Throws NegativeGapSquared.
double localization_gap(double gamma_l, double gamma_g);

// Q1^T (Y_L(other) - Y_L(closest)) Q1 <= feas_tol I.
bool dominates(const Localization& closest, const Localization& other, const Interconnection& m,
               double feas_tol = 1e-7);

}  // namespace iqcloc
