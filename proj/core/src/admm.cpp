#include "iqcloc/admm.hpp"

#include "iqcloc/error.hpp"
#include "iqcloc/synthesis.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace iqcloc {

using conic::Affine;

namespace {

double frobenius_sum(const std::vector<Multiplier>& a, const std::vector<Multiplier>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].matrix() - b[i].matrix()).norm();
    return s;
}

double frobenius_norm(const std::vector<Multiplier>& a) {
    double s = 0.0;
    for (const auto& x : a) s += x.matrix().squaredNorm();
    return std::sqrt(s);
}

Multiplier zero_multiplier(int n_in, int n_out) { return Multiplier(Mat::Zero(n_in + n_out, n_in + n_out), n_in); }

void check_inputs(const Interconnection& m, const QuadMultiplier& wq, const std::vector<StateSpace>& plants) {
    m.check();
    wq.check();
    require(wq.dim() == m.n_w() + m.n_z() && wq.n_in == m.n_w(), ErrorKind::DimensionMismatch,
            "admm_solve: global multiplier does not match (w, z)");
    require(max_abs(wq.X2) == 0.0, ErrorKind::InvalidArgument,
            "admm_solve: the global multiplier must have X2 = 0 so that it is affine in gamma^2");
    require(static_cast<int>(plants.size()) == m.count(), ErrorKind::DimensionMismatch,
            "admm_solve: one plant per subsystem expected");
    for (int i = 0; i < m.count(); ++i) {
        plants[i].check();
        if (plants[i].n_v() != m.nv_parts[i] || plants[i].n_y() != m.ny_parts[i]) {
            std::ostringstream os;
            os << "admm_solve: plant " << i << " has ports (" << plants[i].n_v() << ", " << plants[i].n_y()
               << "), partition needs (" << m.nv_parts[i] << ", " << m.ny_parts[i] << ")";
            fail(ErrorKind::DimensionMismatch, os.str());
        }
    }
}

void seed_check(const Interconnection& m, const std::vector<StateSpace>& plants, const AdmmOptions& opts) {
    AnalysisOptions aopts;
    aopts.solver = opts.solver;
    for (int i = 0; i < m.count(); ++i) {
        try {
            iqc_analysis(open_loop_channel(plants[i]), eval(l2gain_quad(m.nv_parts[i], m.ny_parts[i]), opts.seed_gamma),
                         aopts);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Infeasible) throw;
            std::ostringstream os;
            os << "subsystem " << i << " has no L2 certificate at gamma = " << opts.seed_gamma;
            fail(ErrorKind::SeedInfeasible, os.str());
        }
    }
}

struct ZStep {
    std::vector<Multiplier> Z;
    double gamma = 0.0;
};

ZStep consensus_step(const Interconnection& m, const QuadMultiplier& wq, const std::vector<Multiplier>& x,
                     const std::vector<Multiplier>& v, const AdmmOptions& opts) {
    conic::Program prog;
    std::vector<Affine> zs;
    Affine penalty = Affine::zeros(1, 1);
    for (int i = 0; i < m.count(); ++i) {
        const int nv = m.nv_parts[i], ny = m.ny_parts[i];
        const Affine z = prog.add_symmetric("Z_" + std::to_string(i), nv + ny);
        if (nv > 0) prog.add_psd(z.block(0, 0, nv, nv), "Z11");
        if (ny > 0) prog.add_nsd(z.block(nv, nv, ny, ny), "Z22");
        penalty += prog.add_frobenius_sq_bound(Affine(Mat(x[i].matrix() + v[i].matrix())) - z,
                                               "s_" + std::to_string(i));
        zs.push_back(z);
    }
    const Affine g = prog.add_scalar("g");
    prog.add_psd(g, "g");
    const Affine stacked = conic::congruence(port_permutation(m), conic::blkdiag(zs));
    const Affine w = conic::scaled(g, wq.X1) + Affine(wq.X3);
    prog.add_nsd(gac_matrix(m, stacked, w), "admissibility");
    prog.minimize(g + opts.rho * penalty);
    const conic::SolveReport rep = conic::solve(prog, opts.solver);
    if (!rep.ok()) {
        std::ostringstream os;
        os << "consensus step failed (status " << conic::to_string(rep.status) << ")";
        fail(ErrorKind::NumericalFailure, os.str());
    }
    ZStep out;
    for (int i = 0; i < m.count(); ++i) out.Z.emplace_back(symmetrize(rep.value(zs[i])), m.nv_parts[i]);
    out.gamma = std::sqrt(std::max(0.0, rep.scalar(g)));
    return out;
}

double certified_gamma(const Interconnection& m, const QuadMultiplier& wq, const std::vector<Multiplier>& x,
                       const AdmmOptions& opts) {
    const auto ok = [&](double gamma) {
        const Mat g = gac_matrix(m, x, eval(wq, gamma));
        return lambda_max(g) <= opts.solver.feas_tol * std::max(1.0, max_abs(g));
    };
    try {
        return bisect(0.0, opts.gamma_hi, 1e-7, ok).gamma;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::InfeasibleAtHi) throw;
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

StorageCertificate admm_local_step(const StateSpace& plant, const Multiplier& target,
                                   const conic::SolveOptions& solver) {
    const ClosedLoop sys = open_loop_channel(plant);
    require(target.n_in() == sys.n_v() && target.n_out() == sys.n_y(), ErrorKind::DimensionMismatch,
            "admm_local_step: target does not match the plant ports");
    conic::Program prog;
    const Affine x = prog.add_symmetric("X", target.dim());
    const Affine p = prog.add_symmetric("P", sys.n());
    prog.add_nsd(dissipation_lmi(sys, x, p), "dissipation");
    prog.add_psd(p, "storage");
    prog.minimize(prog.add_frobenius_sq_bound(x - Affine(target.matrix()), "s"));
    const conic::SolveReport rep = conic::solve(prog, solver);
    if (!rep.ok()) {
        std::ostringstream os;
        os << "local step failed (status " << conic::to_string(rep.status) << ")";
        fail(ErrorKind::Infeasible, os.str());
    }
    StorageCertificate cert{symmetrize(rep.value(p)), Multiplier(symmetrize(rep.value(x)), target.n_in()), 0.0};
    cert.feas_residual = lambda_max(dissipation_lmi(sys, cert.multiplier, cert.P));
    return cert;
}

AdmmResult admm_solve(const Interconnection& m, const QuadMultiplier& wq, const std::vector<StateSpace>& plants,
                      const AdmmOptions& opts) {
    check_inputs(m, wq, plants);
    require(opts.max_iter >= 1, ErrorKind::InvalidArgument, "admm_solve: max_iter must be positive");
    require(opts.rho > 0.0, ErrorKind::InvalidArgument, "admm_solve: rho must be positive");
    seed_check(m, plants, opts);

    const int n = m.count();
    AdmmState st;
    for (int i = 0; i < n; ++i) {
        const Multiplier zero = zero_multiplier(m.nv_parts[i], m.ny_parts[i]);
        st.Z.push_back(zero);
        st.X.push_back(zero);
        st.V.push_back(zero);
    }
    std::vector<StorageCertificate> certs(n);

    AdmmState best;
    std::vector<StorageCertificate> best_certs;
    bool converged = false;
    for (int k = 0; k < opts.max_iter && !converged; ++k) {
        const ZStep zs = consensus_step(m, wq, st.X, st.V, opts);
        const std::vector<Multiplier> z_prev = st.Z;
        st.Z = zs.Z;
        st.gamma = zs.gamma;

        std::vector<Multiplier> targets;
        for (int i = 0; i < n; ++i) targets.emplace_back(st.Z[i].matrix() - st.V[i].matrix(), m.nv_parts[i]);
        if (opts.parallel && n > 1) {
            std::vector<std::future<StorageCertificate>> jobs;
            for (int i = 0; i < n; ++i)
                jobs.push_back(std::async(std::launch::async, admm_local_step, std::cref(plants[i]),
                                          std::cref(targets[i]), std::cref(opts.solver)));
            for (int i = 0; i < n; ++i) certs[i] = jobs[i].get();
        } else {
            for (int i = 0; i < n; ++i) certs[i] = admm_local_step(plants[i], targets[i], opts.solver);
        }
        for (int i = 0; i < n; ++i) {
            st.X[i] = certs[i].multiplier;
            st.V[i] = Multiplier(st.V[i].matrix() + st.X[i].matrix() - st.Z[i].matrix(), m.nv_parts[i]);
        }

        st.iter = k + 1;
        st.primal_res = frobenius_sum(st.X, st.Z);
        st.dual_res = opts.rho * frobenius_sum(st.Z, z_prev);
        st.primal_trace.push_back(st.primal_res);
        st.dual_trace.push_back(st.dual_res);
        st.gamma_trace.push_back(st.gamma);

        const double scale = opts.relative_stop ? 1.0 + frobenius_norm(st.Z) : 1.0;
        converged = st.primal_res <= opts.res_tol * scale && st.dual_res <= opts.res_tol;
        if (converged || best.iter == 0 || st.primal_res < best.primal_res) {
            best = st;
            best_certs = certs;
        }
    }

    AdmmResult out;
    out.status = converged ? AdmmStatus::Converged : AdmmStatus::MaxIter;
    if (!converged) {
        // Best iterate by primal residual, with the full traces.
        best.iter = st.iter;
        best.primal_trace = st.primal_trace;
        best.dual_trace = st.dual_trace;
        best.gamma_trace = st.gamma_trace;
        st = best;
        certs = best_certs;
    }
    out.multipliers = st.X;
    out.certificates = certs;
    out.gamma = certified_gamma(m, wq, st.X, opts);
    out.state = std::move(st);
    return out;
}

}  // namespace iqcloc
