#include "iqcloc/synthesis.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace iqcloc {

using conic::Affine;

namespace {

bool feasible_or_false(const std::function<void()>& attempt) {
    try {
        attempt();
        return true;
    } catch (const Error& e) {
        if (e.is_infeasibility() || e.kind() == ErrorKind::NumericalFailure || e.kind() == ErrorKind::SingularMultiplier)
            return false;
        throw;
    }
}

void check_plant_partition(const StateSpace& plant, const Multiplier& x) {
    if (x.n_in() != plant.n_v() || x.n_out() != plant.n_y()) {
        std::ostringstream os;
        os << "multiplier partition (" << x.n_in() << ", " << x.n_out() << ") does not match plant ports ("
           << plant.n_v() << ", " << plant.n_y() << ")";
        fail(ErrorKind::DimensionMismatch, os.str());
    }
}

// Columns spanning the kernel of m; an empty kernel gives a 0-column matrix.
Mat kernel(const Mat& m) { return null_space(m); }

}  // namespace

Multiplier regularize_multiplier(const Multiplier& x) {
    const double smax = sigma_max(x.matrix());
    require(smax > 0.0, ErrorKind::SingularMultiplier, "multiplier is zero");
    if (sigma_min(x.matrix()) >= 1e-8 * smax) return x;
    Mat shifted = x.matrix();
    const int nin = x.n_in(), nout = x.n_out();
    shifted.bottomRightCorner(nout, nout) -= 1e-6 * smax * Mat::Identity(nout, nout);
    if (sigma_min(shifted) < 1e-14 * smax) fail(ErrorKind::SingularMultiplier, "multiplier is singular");
    return Multiplier(shifted, nin);
}

EliminationCertificate synthesis_feasible(const StateSpace& plant, const Multiplier& x_in,
                                          const SynthesisOptions& opts) {
    plant.check();
    check_plant_partition(plant, x_in);
    const Multiplier reg = regularize_multiplier(x_in);
    // The feasible set is invariant under positive scaling of X; work with a
    // unit-norm multiplier and scale the certificate back.
    const double alpha = sigma_max(reg.matrix());
    const Mat x = reg.matrix() / alpha;

    const int n = plant.n(), nv = plant.n_v(), ny = plant.n_y();
    const Mat pp = -x;
    const Mat pp_inv = symmetrize(pp.inverse());
    const Mat eye = Mat::Identity(n, n);

    conic::Program prog;
    const Affine xs = prog.add_symmetric("Q2", n);
    const Affine ys = prog.add_symmetric("Q1", n);
    const Affine zero = Affine::zeros(n, n);
    prog.add_psd(conic::grid({{ys, Affine(eye)}, {Affine(eye), xs}}), "coupling");

    // Primal condition over (x, v).
    const Mat psi = kernel(block_matrix({{plant.C2, plant.D21}}));
    if (psi.cols() > 0) {
        const Mat out1 = block_matrix({{eye, Mat::Zero(n, nv)}, {plant.A, plant.B1}});
        const Mat out2 = block_matrix({{Mat::Zero(nv, n), Mat::Identity(nv, nv)}, {plant.C1, plant.D11}});
        const Affine l1 =
            conic::congruence(out1, conic::grid({{zero, xs}, {xs, zero}})) + Affine(out2.transpose() * pp * out2);
        prog.add_nsd(conic::congruence(psi, l1), "primal");
    }

    // Dual condition over (x, y).
    const Mat phi = kernel(block_matrix({{plant.B2.transpose(), plant.D12.transpose()}}));
    if (phi.cols() > 0) {
        const Mat o1 = block_matrix({{-plant.A.transpose(), -plant.C1.transpose()}, {eye, Mat::Zero(n, ny)}});
        const Mat o2 = block_matrix(
            {{-plant.B1.transpose(), -plant.D11.transpose()}, {Mat::Zero(ny, n), Mat::Identity(ny, ny)}});
        const Affine l2 =
            conic::congruence(o1, conic::grid({{zero, ys}, {ys, zero}})) + Affine(o2.transpose() * pp_inv * o2);
        prog.add_psd(conic::congruence(phi, l2), "dual");
    }

    const conic::SolveReport rep = conic::solve(prog, opts.solver);
    if (!rep.ok()) {
        std::ostringstream os;
        os << "elimination conditions infeasible (status " << conic::to_string(rep.status) << ", residual "
           << rep.residual << ")";
        fail(ErrorKind::Infeasible, os.str());
    }
    Mat ys_val = rep.value(ys), xs_val = rep.value(xs);

    if (opts.refine_certificate) {
        // Largest common eigenvalue margin of the accepted point.
        double margin = std::numeric_limits<double>::infinity();
        for (const auto& con : prog.constraints()) {
            const Mat v = con.expr.value(rep.y);
            if (v.size() > 0) margin = std::min(margin, -lambda_max(v));
        }
        if (margin > 1e-9) {
            const double delta = 0.5 * std::min(margin, 1.0);
            // Same variable layout as prog, so its constraint expressions carry over.
            conic::Program ref;
            const Affine xs2 = ref.add_symmetric("Q2", n);
            const Affine ys2 = ref.add_symmetric("Q1", n);
            for (const auto& con : prog.constraints()) {
                const Eigen::Index k = con.expr.rows();
                ref.add_nsd(con.expr + Affine(delta * Mat::Identity(k, k)), con.label);
            }
            Affine tr = Affine::zeros(1, 1);
            for (int i = 0; i < n; ++i) tr += xs2.block(i, i, 1, 1) + ys2.block(i, i, 1, 1);
            ref.minimize(tr);
            try {
                const conic::SolveReport r2 = conic::solve(ref, opts.solver);
                // A stalled solve is still usable when its iterate keeps the
                // original constraints strict and lowers the trace.
                const double tr1 = xs_val.trace() + ys_val.trace();
                const bool usable = r2.ok() || (r2.y.size() == ref.num_scalars() && r2.y.allFinite() &&
                                                prog.max_violation(r2.y) < -0.25 * delta &&
                                                r2.objective_value < tr1);
                if (usable) {
                    ys_val = r2.value(ys2);
                    xs_val = r2.value(xs2);
                }
            } catch (const Error&) {
                // keep the phase I point
            }
        }
    }
    return EliminationCertificate{symmetrize(ys_val) / alpha, symmetrize(xs_val) * alpha};
}

Mat reconstruct_P(const Mat& q1, const Mat& q2) {
    require(q1.rows() == q1.cols() && q2.rows() == q2.cols() && q1.rows() == q2.rows(), ErrorKind::DimensionMismatch,
            "reconstruct_P: Q1 and Q2 must be square of equal size");
    const Eigen::Index n = q1.rows();
    const Mat m = Mat::Identity(n, n) - q2 * q1;
    const double smax = sigma_max(m);
    if (n > 0 && sigma_min(m) <= 1e-12 * std::max(1.0, smax))
        fail(ErrorKind::SingularCoupling, "I - Q2 Q1 is singular; the coupling condition is not strict");
    // Balanced split R1 = U S^{1/2}, R2 = V S^{1/2}; keeps both halves of P on
    // the same scale.
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat root = svd.singularValues().cwiseSqrt().asDiagonal();
    const Mat r1 = svd.matrixU() * root;
    const Mat r2 = svd.matrixV() * root;
    return reconstruct_P(q1, q2, r1, r2);
}

Mat reconstruct_P(const Mat& q1, const Mat& q2, const Mat& r1, const Mat& r2) {
    const Eigen::Index n = q1.rows();
    require(q2.rows() == n && r1.rows() == n && r1.cols() == n && r2.rows() == n && r2.cols() == n,
            ErrorKind::DimensionMismatch, "reconstruct_P: blocks must all be n x n");
    const Mat eye = Mat::Identity(n, n), zero = Mat::Zero(n, n);
    const Mat lhs = block_matrix({{q1, r2}, {eye, zero}});
    const Mat rhs = block_matrix({{eye, zero}, {q2, r1}});
    Eigen::FullPivLU<Mat> lu(lhs);
    if (!lu.isInvertible()) fail(ErrorKind::SingularCoupling, "reconstruct_P: R2 is singular");
    const Mat p = lu.solve(rhs);
    const double scale = std::max(1.0, max_abs(p));
    if (max_abs(p - p.transpose()) > 1e-6 * scale)
        fail(ErrorKind::SingularCoupling, "reconstruct_P: R1 R2^T does not match I - Q2 Q1");
    return symmetrize(p);
}

Controller recover_controller(const StateSpace& plant, const Multiplier& x_in, const Mat& p_in,
                              const SynthesisOptions& opts) {
    plant.check();
    check_plant_partition(plant, x_in);
    const int n = plant.n(), nv = plant.n_v(), ny = plant.n_y(), nu = plant.n_u(), nm = plant.n_m();
    const int ncl = 2 * n;
    require(p_in.rows() == ncl && p_in.cols() == ncl, ErrorKind::DimensionMismatch,
            "recover_controller: P must be 2n x 2n for a full-order controller");
    const double alpha = std::max(sigma_max(x_in.matrix()), 1e-300);
    const Multiplier x = x_in.scaled(1.0 / alpha);
    const Mat p = p_in / alpha;

    const Mat x11 = x.x11(), x12 = x.x12(), x22 = x.x22();
    // -X22 = L L^T
    Eigen::SelfAdjointEigenSolver<Mat> es(-x22);
    if (ny > 0 && es.eigenvalues().minCoeff() < -1e-9)
        fail(ErrorKind::InvalidArgument, "controller recovery needs X22 <= 0");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-12) keep.push_back(i);
    Mat l(ny, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j)
        l.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(es.eigenvalues()(keep[j]));

    conic::Program prog;
    const Affine k = prog.add_matrix("K", n + nu, n + nm);

    const Mat a0 = blkdiag({plant.A, Mat::Zero(n, n)});
    const Mat b0 = block_matrix({{plant.B1}, {Mat::Zero(n, nv)}});
    const Mat c0 = block_matrix({{plant.C1, Mat::Zero(ny, n)}});
    const Mat lb = block_matrix({{Mat::Zero(n, n), plant.B2}, {Mat::Identity(n, n), Mat::Zero(n, nu)}});
    const Mat ld = block_matrix({{Mat::Zero(ny, n), plant.D12}});
    const Mat rc = block_matrix({{Mat::Zero(n, n), Mat::Identity(n, n)}, {plant.C2, Mat::Zero(nm, n)}});
    const Mat rd = block_matrix({{Mat::Zero(n, nv)}, {plant.D21}});

    const Affine acl = Affine(a0) + lb * k * rc;
    const Affine bcl = Affine(b0) + lb * k * rd;
    const Affine ccl = Affine(c0) + ld * k * rc;
    const Affine dcl = Affine(plant.D11) + ld * k * rd;

    const Affine top = conic::grid({{acl.transpose() * p + p * acl, p * bcl}, {bcl.transpose() * p, Affine::zeros(nv, nv)}});
    const Affine cd = conic::hstack({ccl, dcl});
    Mat e = Mat::Zero(nv, ncl + nv);
    e.rightCols(nv).setIdentity();
    const Mat cross = e.transpose() * x12;
    const Affine phi = top - Affine(e.transpose() * x11 * e) - cross * cd - (cross * cd).transpose();
    const Eigen::Index nl = l.cols();
    const Affine lcd = l.transpose() * cd;
    const Affine big = conic::grid({{phi, lcd.transpose()}, {lcd, Affine(-Mat::Identity(nl, nl))}});
    const Eigen::Index nb = big.rows();

    const Mat ik = Mat::Identity(n + nu, n + nu), jk = Mat::Identity(n + nm, n + nm);
    auto norm_bound = [&](const Affine& rho) {
        return conic::grid({{conic::scaled(rho, ik), k}, {k.transpose(), conic::scaled(rho, jk)}});
    };

    // Stage 1: most negative LMI margin under a gain cap.
    conic::Program stage1 = prog;
    const Affine t = stage1.add_scalar("t");
    stage1.add_nsd(big - conic::scaled(t, Mat::Identity(nb, nb)), "dissipation");
    stage1.add_psd(norm_bound(Affine(Mat::Constant(1, 1, opts.gain_cap))), "gain cap");
    stage1.minimize(t);
    const conic::SolveReport r1 = conic::solve(stage1, opts.solver);
    const double tol = opts.solver.feas_tol * std::max(1.0, max_abs(p));
    if (!r1.ok() && r1.status != conic::Status::MaxIter) fail(ErrorKind::Infeasible, "controller recovery LMI infeasible");
    const double t1 = r1.scalar(t);
    if (t1 > tol) {
        std::ostringstream os;
        os << "controller recovery LMI infeasible (best margin " << t1 << ")";
        fail(ErrorKind::Infeasible, os.str());
    }
    Mat kval = r1.value(k);

    // Stage 2: smallest controller keeping half of the margin.
    if (t1 < -tol) {
        conic::Program stage2 = prog;
        const Affine rho = stage2.add_scalar("rho");
        stage2.add_nsd(big - Affine(0.5 * t1 * Mat::Identity(nb, nb)), "dissipation");
        stage2.add_psd(norm_bound(rho), "gain");
        stage2.minimize(rho);
        try {
            const conic::SolveReport r2 = conic::solve(stage2, opts.solver);
            if (r2.ok()) kval = r2.value(k);
        } catch (const Error&) {
            // keep the stage-1 controller
        }
    }
    return Controller::unpack(kval, n);
}

BisectionResult bisect(double lo, double hi, double tol, const std::function<bool(double)>& feasible) {
    require(lo <= hi, ErrorKind::InvalidArgument, "bisection needs lo <= hi");
    require(tol > 0.0, ErrorKind::InvalidArgument, "bisection tolerance must be positive");
    BisectionResult res;
    res.iterations = 1;
    if (!feasible(hi)) {
        std::ostringstream os;
        os << "infeasible at the upper end gamma = " << hi;
        fail(ErrorKind::InfeasibleAtHi, os.str());
    }
    while (hi - lo > tol * std::max(1e-6, hi) && res.iterations < 200) {
        const double mid = 0.5 * (lo + hi);
        ++res.iterations;
        if (feasible(mid))
            hi = mid;
        else
            lo = mid;
    }
    res.gamma = hi;
    return res;
}

BisectionResult bisect_gamma(const StateSpace& plant, const QuadMultiplier& q, double lo, double hi,
                             const SynthesisOptions& opts) {
    q.check();
    if (!is_monotone_on(q, lo, hi, opts.monotone_points))
        fail(ErrorKind::NonMonotone, "multiplier is not monotone on the bisection interval");
    return bisect(lo, hi, opts.bisect_tol, [&](double g) {
        SynthesisOptions quick = opts;
        quick.refine_certificate = false;
        return feasible_or_false([&] { synthesis_feasible(plant, eval(q, g), quick); });
    });
}

BisectionResult bisect_gamma(const ClosedLoop& sys, const QuadMultiplier& q, double lo, double hi,
                             const SynthesisOptions& opts) {
    q.check();
    if (!is_monotone_on(q, lo, hi, opts.monotone_points))
        fail(ErrorKind::NonMonotone, "multiplier is not monotone on the bisection interval");
    AnalysisOptions aopts;
    aopts.solver = opts.solver;
    return bisect(lo, hi, opts.bisect_tol, [&](double g) {
        return feasible_or_false([&] { iqc_analysis(sys, eval(q, g), aopts); });
    });
}

std::pair<double, double> default_gamma_interval(const StateSpace& plant) {
    plant.check();
    if (is_hurwitz(plant.A)) {
        const double g = freq_gain_oracle(open_loop_channel(plant));
        if (g > 0.0) return {0.0, 10.0 * g};
    }
    return {0.0, 1e4};
}

SynthesisResult synthesize(const StateSpace& plant, const QuadMultiplier& q, double lo, double hi,
                           const SynthesisOptions& opts) {
    SynthesisResult res;
    res.gamma_star = bisect_gamma(plant, q, lo, hi, opts).gamma;
    res.gamma = res.gamma_star * (1.0 + opts.recover_margin);
    if (res.gamma > hi) res.gamma = hi;
    const Multiplier x = eval(q, res.gamma);
    res.elimination = synthesis_feasible(plant, x, opts);
    res.P = reconstruct_P(res.elimination.Q1, res.elimination.Q2);
    res.controller = recover_controller(plant, x, res.P, opts);
    const ClosedLoop cl = close_loop(plant, res.controller);
    res.cert = StorageCertificate{res.P, x, lambda_max(dissipation_lmi(cl, x, res.P))};
    if (res.cert.feas_residual > opts.solver.feas_tol * std::max(1.0, max_abs(res.P))) {
        AnalysisOptions aopts;
        aopts.solver = opts.solver;
        res.cert = iqc_analysis(cl, x, aopts);
    }
    return res;
}

}  // namespace iqcloc
