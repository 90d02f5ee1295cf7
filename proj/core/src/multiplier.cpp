#include "iqcloc/multiplier.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace iqcloc {

Multiplier::Multiplier(const Mat& x, int n_in) : n_in_(n_in) {
    require(x.rows() == x.cols(), ErrorKind::DimensionMismatch, "multiplier must be square");
    require(n_in >= 0 && n_in <= x.rows(), ErrorKind::DimensionMismatch, "multiplier input partition out of range");
    require(x.allFinite(), ErrorKind::InvalidArgument, "multiplier has non-finite entries");
    require(is_symmetric(x), ErrorKind::InvalidArgument, "multiplier is not symmetric");
    x_ = symmetrize(x);
}

Multiplier Multiplier::from_blocks(const Mat& x11, const Mat& x12, const Mat& x22) {
    require(x12.rows() == x11.rows() && x12.cols() == x22.rows(), ErrorKind::DimensionMismatch,
            "multiplier blocks do not conform");
    return Multiplier(block_matrix({{x11, x12}, {x12.transpose(), x22}}), static_cast<int>(x11.rows()));
}

void QuadMultiplier::check() const {
    require(X1.rows() == X1.cols() && X2.rows() == X1.rows() && X2.cols() == X1.cols() && X3.rows() == X1.rows() &&
                X3.cols() == X1.cols(),
            ErrorKind::DimensionMismatch, "quadratic multiplier coefficients differ in shape");
    require(n_in >= 0 && n_in <= X1.rows(), ErrorKind::DimensionMismatch, "quadratic multiplier partition out of range");
    require(is_symmetric(X1) && is_symmetric(X2) && is_symmetric(X3), ErrorKind::InvalidArgument,
            "quadratic multiplier coefficients must be symmetric");
}

Multiplier eval(const QuadMultiplier& q, double gamma) {
    q.check();
    return Multiplier(gamma * gamma * q.X1 + 2.0 * gamma * q.X2 + q.X3, q.n_in);
}

Multiplier passivity_multiplier(int n, double epsilon) {
    require(n >= 1, ErrorKind::InvalidArgument, "passivity multiplier needs n >= 1");
    require(epsilon >= 0.0, ErrorKind::InvalidArgument, "passivity multiplier needs epsilon >= 0");
    const Mat eye = Mat::Identity(n, n);
    return Multiplier::from_blocks(Mat::Zero(n, n), eye, -epsilon * eye);
}

QuadMultiplier l2gain_quad(int n_in, int n_out) {
    require(n_in >= 0 && n_out >= 0, ErrorKind::InvalidArgument, "negative port dimension");
    const int n = n_in + n_out;
    QuadMultiplier q;
    q.n_in = n_in;
    q.X1 = Mat::Zero(n, n);
    q.X1.topLeftCorner(n_in, n_in).setIdentity();
    q.X2 = Mat::Zero(n, n);
    q.X3 = Mat::Zero(n, n);
    q.X3.bottomRightCorner(n_out, n_out) = -Mat::Identity(n_out, n_out);
    return q;
}

bool is_monotone_on(const QuadMultiplier& q, double lo, double hi, int points, double tol) {
    require(points >= 2, ErrorKind::InvalidArgument, "monotonicity grid needs at least two points");
    require(lo <= hi, ErrorKind::InvalidArgument, "monotonicity grid needs lo <= hi");
    Mat prev = eval(q, lo).matrix();
    for (int k = 1; k < points; ++k) {
        const double g = lo + (hi - lo) * k / (points - 1);
        Mat cur = eval(q, g).matrix();
        if (!is_nsd(prev - cur, tol)) return false;
        prev = std::move(cur);
    }
    return true;
}

StabilityCertificate check_stability_multiplier(const Multiplier& x, double tol) {
    const Mat x11 = x.x11(), x12 = x.x12(), x22 = x.x22();
    if (!is_psd(x11, tol)) fail(ErrorKind::NotStabilityMultiplier, "X11 is not positive semidefinite");
    if (!is_nsd(x22, tol)) fail(ErrorKind::NotStabilityMultiplier, "X22 is not negative semidefinite");

    StabilityCertificate cert;
    cert.pi11 = sigma_max(x11);
    cert.pi12 = sigma_max(x12);
    cert.pi22 = x22.size() == 0 ? 0.0 : lambda_min(-x22);
    if (cert.pi22 <= tol) {
        std::ostringstream os;
        os << "X22 is singular (lambda_min(-X22) = " << cert.pi22 << "); no output energy bound";
        fail(ErrorKind::NotStabilityMultiplier, os.str());
    }
    const double base = cert.pi12 * cert.pi12 / cert.pi22;
    const double delta = std::max(1e-6, 0.01 * base);
    cert.epsilon = base + delta;
    cert.c = (cert.pi11 + cert.epsilon) * cert.epsilon / (cert.pi22 * cert.epsilon - cert.pi12 * cert.pi12);
    return cert;
}

}  // namespace iqcloc
