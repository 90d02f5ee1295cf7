#include "iqcloc/analysis.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace iqcloc {

namespace {

// Maps (x, v) to (v, y).
Mat port_map(const ClosedLoop& sys) {
    const int n = sys.n(), nv = sys.n_v();
    return block_matrix({{Mat::Zero(nv, n), Mat::Identity(nv, nv)}, {sys.C, sys.D}});
}

// Maps (x, v) to (x, x').
Mat state_map(const ClosedLoop& sys) {
    const int n = sys.n(), nv = sys.n_v();
    return block_matrix({{Mat::Identity(n, n), Mat::Zero(n, nv)}, {sys.A, sys.B}});
}

void check_partition(const ClosedLoop& sys, int n_in, int n_out) {
    if (n_in != sys.n_v() || n_out != sys.n_y()) {
        std::ostringstream os;
        os << "multiplier partition (" << n_in << ", " << n_out << ") does not match closed-loop ports ("
           << sys.n_v() << ", " << sys.n_y() << ")";
        fail(ErrorKind::DimensionMismatch, os.str());
    }
}

StorageCertificate solve_storage(const ClosedLoop& sys, const Multiplier& x, const AnalysisOptions& opts,
                                 const std::optional<std::pair<double, double>>& output_bound) {
    sys.check();
    check_partition(sys, x.n_in(), x.n_out());
    conic::Program prog;
    const conic::Affine p = prog.add_symmetric("P", sys.n());
    prog.add_nsd(dissipation_lmi(sys, conic::Affine(x.matrix()), p), "dissipation");
    prog.add_psd(p - conic::Affine(opts.p_min * Mat::Identity(sys.n(), sys.n())), "storage");
    if (output_bound) {
        const auto [beta, lambda] = *output_bound;
        prog.add_nsd(conic::Affine(lambda * sys.C.transpose() * sys.C) - beta * beta * p, "output bound");
    }
    const conic::SolveReport rep = conic::solve(prog, opts.solver);
    if (!rep.ok()) {
        std::ostringstream os;
        os << "no storage function (status " << conic::to_string(rep.status) << ", residual " << rep.residual << ")";
        fail(ErrorKind::Infeasible, os.str());
    }
    StorageCertificate cert{symmetrize(rep.value(p)), x, 0.0};
    cert.feas_residual = lambda_max(dissipation_lmi(sys, x, cert.P));
    return cert;
}

}  // namespace

Mat dissipation_lmi(const ClosedLoop& sys, const Multiplier& x, const Mat& p) {
    check_partition(sys, x.n_in(), x.n_out());
    const int n = sys.n();
    const Mat s = state_map(sys), g = port_map(sys);
    const Mat mid = block_matrix({{Mat::Zero(n, n), p}, {p, Mat::Zero(n, n)}});
    return symmetrize(s.transpose() * mid * s - g.transpose() * x.matrix() * g);
}

conic::Affine dissipation_lmi(const ClosedLoop& sys, const conic::Affine& x, const conic::Affine& p) {
    const int n = sys.n();
    require(x.rows() == sys.n_v() + sys.n_y() && x.cols() == x.rows(), ErrorKind::DimensionMismatch,
            "multiplier expression does not match closed-loop ports");
    require(p.rows() == n && p.cols() == n, ErrorKind::DimensionMismatch, "storage matrix has wrong size");
    const conic::Affine zero = conic::Affine::zeros(n, n);
    const conic::Affine mid = conic::grid({{zero, p}, {p, zero}});
    return conic::congruence(state_map(sys), mid) - conic::congruence(port_map(sys), x);
}

StorageCertificate iqc_analysis(const ClosedLoop& sys, const Multiplier& x, const AnalysisOptions& opts) {
    return solve_storage(sys, x, opts, std::nullopt);
}

StorageCertificate iqc_analysis_output_bound(const ClosedLoop& sys, const Multiplier& x, double beta, double lambda,
                                             const AnalysisOptions& opts) {
    require(beta > 0.0, ErrorKind::InvalidArgument, "output bound needs beta > 0");
    require(lambda >= 0.0, ErrorKind::InvalidArgument, "output bound weight must be nonnegative");
    return solve_storage(sys, x, opts, std::make_pair(beta, lambda));
}

ReachabilityCertificate reachability_certificate(const ClosedLoop& sys, double beta, const AnalysisOptions& opts) {
    require(beta > 0.0, ErrorKind::InvalidArgument, "reachability level needs beta > 0");
    sys.check();
    const int nv = sys.n_v(), ny = sys.n_y();
    Mat supply = Mat::Zero(nv + ny, nv + ny);
    supply.topLeftCorner(nv, nv).setIdentity();
    ReachabilityCertificate out;
    AnalysisOptions strict = opts;
    strict.p_min = std::max(opts.p_min, 1e-6);
    out.storage = solve_storage(sys, Multiplier(supply, nv), strict, std::nullopt);
    out.level = 2.0 * beta;
    return out;
}

double dissipation_residual(const ClosedLoop& sys, const StorageCertificate& cert, const Signal& input) {
    check_partition(sys, cert.multiplier.n_in(), cert.multiplier.n_out());
    require(cert.P.rows() == sys.n() && cert.P.cols() == sys.n(), ErrorKind::DimensionMismatch,
            "certificate storage does not match the state dimension");
    const Trajectory traj = simulate(sys, input);
    const Mat& x = cert.multiplier.matrix();
    double worst = input.size() == 0 ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < input.size(); ++k) {
        const Vec& state = traj.states.samples[k];
        const Vec& w = input.samples[k];
        const Vec& y = traj.outputs.samples[k];
        const Vec xdot = sys.A * state + sys.B * w;
        const double vdot = 2.0 * state.dot(cert.P * xdot);
        Vec port(w.size() + y.size());
        port << w, y;
        worst = std::max(worst, vdot - port.dot(x * port));
    }
    return std::max(worst, 0.0);
}

}  // namespace iqcloc
