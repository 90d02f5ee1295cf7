#pragma once

#include <Eigen/Dense>

#include <vector>

namespace iqcloc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace tol {
// Relative symmetry tolerance on ||S - S^T||_max / max(1, ||S||_max).
inline constexpr double sym = 1e-8;
// Numerical rank threshold, relative to the largest singular value.
inline constexpr double rank = 1e-10;
}  // namespace tol

double max_abs(const Mat& a);
bool is_symmetric(const Mat& s, double rel_tol = tol::sym);
Mat symmetrize(const Mat& s);

// Eigenvalues of the symmetric part of s, ascending.
Vec sym_eigenvalues(const Mat& s);
double lambda_min(const Mat& s);
double lambda_max(const Mat& s);

bool is_psd(const Mat& s, double tol);
bool is_nsd(const Mat& s, double tol);

Vec singular_values(const Mat& a);
double sigma_max(const Mat& a);
double sigma_min(const Mat& a);
int numerical_rank(const Mat& a, double rel_tol = tol::rank);

// Orthonormal basis of {x : a x = 0}. Rank-revealing; never throws. A
// matrix with zero rows (or all-zero entries) returns the identity.
Mat null_space(const Mat& a, double rel_tol = tol::rank);

// U-perp for a full-rank U (k x n): columns orthonormal, U * result = 0,
// [U^T result] square and nonsingular. Empty n x 0 when k >= n.
// Throws RankDeficient when U is not of full rank.
Mat orth_complement(const Mat& u);

Mat kron(const Mat& a, const Mat& b);
Mat blkdiag(const std::vector<Mat>& blocks);

// Assembles a dense matrix from a grid of blocks. Rows of the grid must agree
// on block heights, columns on block widths.
Mat block_matrix(const std::vector<std::vector<Mat>>& grid);

}  // namespace iqcloc
