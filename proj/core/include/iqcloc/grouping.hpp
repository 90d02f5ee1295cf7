#pragma once

// Group localization: subsystems are partitioned into disjoint groups of
// bounded size, and each group shares a full-block supply rate. Membership is
// encoded by P = rho rho^T with rho the N x Ng assignment matrix.

#include "iqcloc/localization.hpp"

#include <vector>

namespace iqcloc {

using Groups = std::vector<std::vector<int>>;

// N x Ng 0/1 matrix with rho(i, j) = 1 iff subsystem i is in group j. Throws
// InvalidArgument unless groups partition {0, ..., n-1}.
Mat assignment_matrix(const Groups& groups, int n);
// rho rho^T
Mat membership_matrix(const Groups& groups, int n);

// Groups of a binary membership matrix, each sorted, ordered by smallest
// member. Throws InvalidArgument for a non-binary, non-symmetric matrix or
// one with P_ii != 1, NotEquivalence when transitivity fails.
Groups membership_from_P(const Mat& p, double tol = 1e-9);

// Block (i, j) of x scaled by p(i, j); sizes lists the block sizes. Throws
// DimensionMismatch.
Mat hadamard_blocks(const Mat& p, const Mat& x, const std::vector<int>& sizes);
// Applied to all three coefficients over the subsystem port blocks.
JointMultiplier hadamard_blocks(const Mat& p, const JointMultiplier& x, const Interconnection& m);

struct GroupOptions {
    conic::SolveOptions solver;
    // Stop when |D_k - D_{k-1}| < tol.
    double tol = 1e-5;
    int max_iter = 100;
    // Weight of sum_{i<j} P_ij relative to the initial distance.
    double eta_scale = 0.1;
    double round_threshold = 0.5;
    // Relaxed entries below this are treated as zero.
    double support_tol = 1e-6;
    bool sign_constraints = true;
    double relax = 1e-8;
};

struct GroupLocalization {
    Groups groups;
    // P o X at the rounded P.
    JointMultiplier multipliers;
    double distance = 0.0;
    int iterations = 0;
    bool converged = false;
    // Last relaxed membership matrix and its rounding.
    Mat relaxed_P;
    Mat P;
    // Per X-step: distance at the incoming X and at the solved X.
    std::vector<double> distance_before, distance_after;
};

// Min-distance localization with the block pattern of the given partition.
// Throws Infeasible.
Localization partition_localization(const Interconnection& m, const QuadMultiplier& wq, const Groups& groups,
                                    const GroupOptions& opts = {});

// Turns a relaxed membership matrix into a partition: threshold, transitive
// closure, capacity split, then merge or split to reach ng groups.
Groups round_membership(const Mat& relaxed, int ng, int nbar, double threshold = 0.5);

// Alternating minimization over P and X. Requires nbar < N and
// ng * nbar >= N (InvalidArgument). Throws Infeasible.
GroupLocalization group_localize(const Interconnection& m, const QuadMultiplier& wq, int ng, int nbar,
                                 const GroupOptions& opts = {});

}  // namespace iqcloc
