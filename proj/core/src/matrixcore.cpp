#include "iqcloc/matrixcore.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace iqcloc {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::NotStabilityMultiplier: return "NotStabilityMultiplier";
        case ErrorKind::SingularMultiplier: return "SingularMultiplier";
        case ErrorKind::SingularCoupling: return "SingularCoupling";
        case ErrorKind::Infeasible: return "Infeasible";
        case ErrorKind::InfeasibleAtHi: return "InfeasibleAtHi";
        case ErrorKind::NonMonotone: return "NonMonotone";
        case ErrorKind::NotWellPosed: return "NotWellPosed";
        case ErrorKind::NotALocalization: return "NotALocalization";
        case ErrorKind::NegativeGapSquared: return "NegativeGapSquared";
        case ErrorKind::NotEquivalence: return "NotEquivalence";
        case ErrorKind::SeedInfeasible: return "SeedInfeasible";
        case ErrorKind::MaxIter: return "MaxIter";
        case ErrorKind::Unstable: return "Unstable";
        case ErrorKind::Unbounded: return "Unbounded";
        case ErrorKind::NumericalFailure: return "NumericalFailure";
        case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

double max_abs(const Mat& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

bool is_symmetric(const Mat& s, double rel_tol) {
    if (s.rows() != s.cols()) return false;
    return max_abs(s - s.transpose()) <= rel_tol * std::max(1.0, max_abs(s));
}

Mat symmetrize(const Mat& s) {
    require(s.rows() == s.cols(), ErrorKind::DimensionMismatch, "symmetrize expects a square matrix");
    return 0.5 * (s + s.transpose());
}

Vec sym_eigenvalues(const Mat& s) {
    if (s.size() == 0) return Vec();
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(s), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double lambda_min(const Mat& s) {
    const Vec ev = sym_eigenvalues(s);
    return ev.size() == 0 ? 0.0 : ev(0);
}

double lambda_max(const Mat& s) {
    const Vec ev = sym_eigenvalues(s);
    return ev.size() == 0 ? 0.0 : ev(ev.size() - 1);
}

bool is_psd(const Mat& s, double tol) { return s.size() == 0 || lambda_min(s) >= -tol; }
bool is_nsd(const Mat& s, double tol) { return s.size() == 0 || lambda_max(s) <= tol; }

Vec singular_values(const Mat& a) {
    if (a.size() == 0) return Vec();
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues();
}

double sigma_max(const Mat& a) {
    const Vec sv = singular_values(a);
    return sv.size() == 0 ? 0.0 : sv(0);
}

double sigma_min(const Mat& a) {
    const Vec sv = singular_values(a);
    if (sv.size() == 0) return 0.0;
    // Wide or tall inputs: the trailing implicit singular values are zero
    // only for the non-square null directions, which min(rows, cols) skips.
    return sv(sv.size() - 1);
}

int numerical_rank(const Mat& a, double rel_tol) {
    const Vec sv = singular_values(a);
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cut = rel_tol * sv(0);
    return static_cast<int>((sv.array() > cut).count());
}

Mat null_space(const Mat& a, double rel_tol) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0 || max_abs(a) == 0.0) return Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    const double cut = rel_tol * sv(0);
    const Eigen::Index r = (sv.array() > cut).count();
    return svd.matrixV().rightCols(n - r);
}

Mat orth_complement(const Mat& u) {
    const Eigen::Index full = std::min(u.rows(), u.cols());
    if (numerical_rank(u) < full) {
        std::ostringstream os;
        os << "orth_complement: numerical rank " << numerical_rank(u) << " < " << full;
        fail(ErrorKind::RankDeficient, os.str());
    }
    if (u.rows() >= u.cols()) return Mat(u.cols(), 0);
    return null_space(u);
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat blkdiag(const std::vector<Mat>& blocks) {
    Eigen::Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat out = Mat::Zero(rows, cols);
    Eigen::Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

Mat block_matrix(const std::vector<std::vector<Mat>>& grid) {
    if (grid.empty()) return Mat();
    const std::size_t ncol = grid.front().size();
    std::vector<Eigen::Index> heights(grid.size()), widths(ncol);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i].size() == ncol, ErrorKind::DimensionMismatch, "block_matrix: ragged grid");
        heights[i] = grid[i].front().rows();
    }
    for (std::size_t j = 0; j < ncol; ++j) widths[j] = grid.front()[j].cols();
    Eigen::Index rows = 0, cols = 0;
    for (auto h : heights) rows += h;
    for (auto w : widths) cols += w;
    Mat out(rows, cols);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Eigen::Index c = 0;
        for (std::size_t j = 0; j < ncol; ++j) {
            const Mat& b = grid[i][j];
            if (b.rows() != heights[i] || b.cols() != widths[j]) {
                std::ostringstream os;
                os << "block_matrix: block (" << i << "," << j << ") is " << b.rows() << "x" << b.cols()
                   << ", expected " << heights[i] << "x" << widths[j];
                fail(ErrorKind::DimensionMismatch, os.str());
            }
            out.block(r, c, b.rows(), b.cols()) = b;
            c += widths[j];
        }
        r += heights[i];
    }
    return out;
}

}  // namespace iqcloc
