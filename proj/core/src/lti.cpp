#include "iqcloc/lti.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

namespace iqcloc {

namespace {

void expect_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
        fail(ErrorKind::DimensionMismatch, os.str());
    }
    require(m.allFinite(), ErrorKind::InvalidArgument, std::string(name) + " has non-finite entries");
}

}  // namespace

void StateSpace::check() const {
    const int nx = n(), nv = n_v(), nu = n_u(), ny = n_y(), nm = n_m();
    expect_shape(A, nx, nx, "A");
    expect_shape(B1, nx, nv, "B1");
    expect_shape(B2, nx, nu, "B2");
    expect_shape(C1, ny, nx, "C1");
    expect_shape(D11, ny, nv, "D11");
    expect_shape(D12, ny, nu, "D12");
    expect_shape(C2, nm, nx, "C2");
    expect_shape(D21, nm, nv, "D21");
}

StateSpace StateSpace::open_loop(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
    StateSpace p;
    p.A = a;
    p.B1 = b;
    p.C1 = c;
    p.D11 = d;
    p.B2 = Mat::Zero(a.rows(), 0);
    p.D12 = Mat::Zero(c.rows(), 0);
    p.C2 = Mat::Zero(0, a.rows());
    p.D21 = Mat::Zero(0, b.cols());
    p.check();
    return p;
}

Controller Controller::zero(int n_u, int n_m, int n_c) {
    return Controller{Mat::Zero(n_c, n_c), Mat::Zero(n_c, n_m), Mat::Zero(n_u, n_c), Mat::Zero(n_u, n_m)};
}

Mat Controller::packed() const { return block_matrix({{Ac, Bc}, {Cc, Dc}}); }

Controller Controller::unpack(const Mat& k, int n_c) {
    require(n_c >= 0 && n_c <= k.rows() && n_c <= k.cols(), ErrorKind::DimensionMismatch,
            "controller order exceeds packed matrix");
    const Eigen::Index nu = k.rows() - n_c, nm = k.cols() - n_c;
    return Controller{k.topLeftCorner(n_c, n_c), k.topRightCorner(n_c, nm), k.bottomLeftCorner(nu, n_c),
                      k.bottomRightCorner(nu, nm)};
}

void ClosedLoop::check() const {
    expect_shape(A, n(), n(), "A");
    expect_shape(B, n(), n_v(), "B");
    expect_shape(C, n_y(), n(), "C");
    expect_shape(D, n_y(), n_v(), "D");
}

ClosedLoop close_loop(const StateSpace& p, const Controller& k) {
    p.check();
    const int nc = k.n_c();
    expect_shape(k.Ac, nc, nc, "Ac");
    expect_shape(k.Bc, nc, p.n_m(), "Bc");
    expect_shape(k.Cc, p.n_u(), nc, "Cc");
    expect_shape(k.Dc, p.n_u(), p.n_m(), "Dc");

    ClosedLoop cl;
    cl.A = block_matrix({{p.A + p.B2 * k.Dc * p.C2, p.B2 * k.Cc}, {k.Bc * p.C2, k.Ac}});
    cl.B = block_matrix({{p.B1 + p.B2 * k.Dc * p.D21}, {k.Bc * p.D21}});
    cl.C = block_matrix({{p.C1 + p.D12 * k.Dc * p.C2, p.D12 * k.Cc}});
    cl.D = p.D11 + p.D12 * k.Dc * p.D21;
    return cl;
}

ClosedLoop open_loop_channel(const StateSpace& p) {
    p.check();
    return ClosedLoop{p.A, p.B1, p.C1, p.D11};
}

bool is_hurwitz(const Mat& a, double margin) {
    if (a.size() == 0) return true;
    Eigen::EigenSolver<Mat> es(a, false);
    return es.eigenvalues().real().maxCoeff() < -margin;
}

std::vector<double> default_frequency_grid() {
    std::vector<double> w;
    w.reserve(401);
    w.push_back(0.0);
    for (int k = 0; k < 400; ++k) w.push_back(std::pow(10.0, -3.0 + 6.0 * k / 399.0));
    return w;
}

double freq_gain_oracle(const ClosedLoop& sys, const std::vector<double>& w_grid) {
    sys.check();
    if (!is_hurwitz(sys.A)) fail(ErrorKind::Unstable, "frequency oracle needs a Hurwitz state matrix");
    using CMat = Eigen::MatrixXcd;
    const Eigen::Index n = sys.n();
    const CMat a = sys.A.cast<std::complex<double>>();
    const CMat b = sys.B.cast<std::complex<double>>();
    const CMat c = sys.C.cast<std::complex<double>>();
    const CMat d = sys.D.cast<std::complex<double>>();
    double best = 0.0;
    for (double w : w_grid) {
        CMat g = d;
        if (n > 0) {
            const CMat shifted = std::complex<double>(0.0, w) * CMat::Identity(n, n) - a;
            g += c * shifted.partialPivLu().solve(b);
        }
        if (g.size() == 0) continue;
        Eigen::JacobiSVD<CMat> svd(g);
        best = std::max(best, svd.singularValues()(0));
    }
    return best;
}

double freq_gain_oracle(const ClosedLoop& sys) { return freq_gain_oracle(sys, default_frequency_grid()); }

double Signal::energy() const {
    double e = 0.0;
    for (const auto& s : samples) e += s.squaredNorm();
    return e * dt;
}

double default_step(const ClosedLoop& sys) {
    const double s = sigma_max(sys.A);
    if (s == 0.0) return 1e-2;
    return std::clamp(0.1 / s, 1e-4, 1e-2);
}

Trajectory simulate(const ClosedLoop& sys, const Signal& input) {
    sys.check();
    require(input.dt > 0.0, ErrorKind::InvalidArgument, "signal dt must be positive");
    for (const auto& s : input.samples)
        require(s.size() == sys.n_v(), ErrorKind::DimensionMismatch, "input sample dimension differs from B columns");

    Trajectory out;
    out.states.dt = input.dt;
    out.outputs.dt = input.dt;
    const std::size_t len = input.size();
    if (len == 0) return out;

    const int sub = std::max(1, static_cast<int>(std::ceil(input.dt / default_step(sys) - 1e-12)));
    const double h = input.dt / sub;
    auto rhs = [&](const Vec& x, const Vec& w) -> Vec { return sys.A * x + sys.B * w; };

    Vec x = Vec::Zero(sys.n());
    out.states.samples.reserve(len);
    out.outputs.samples.reserve(len);
    for (std::size_t k = 0; k < len; ++k) {
        const Vec& w0 = input.samples[k];
        out.states.samples.push_back(x);
        out.outputs.samples.push_back(sys.C * x + sys.D * w0);
        if (k + 1 == len) break;
        const Vec& w1 = input.samples[k + 1];
        for (int s = 0; s < sub; ++s) {
            const double t0 = static_cast<double>(s) / sub;
            const double tm = (s + 0.5) / sub;
            const double t1 = static_cast<double>(s + 1) / sub;
            const Vec wa = (1.0 - t0) * w0 + t0 * w1;
            const Vec wm = (1.0 - tm) * w0 + tm * w1;
            const Vec wb = (1.0 - t1) * w0 + t1 * w1;
            const Vec k1 = rhs(x, wa);
            const Vec k2 = rhs(x + 0.5 * h * k1, wm);
            const Vec k3 = rhs(x + 0.5 * h * k2, wm);
            const Vec k4 = rhs(x + h * k3, wb);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return out;
}

}  // namespace iqcloc
