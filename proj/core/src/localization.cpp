#include "iqcloc/localization.hpp"

#include "iqcloc/error.hpp"

#include <cmath>
#include <sstream>

namespace iqcloc {

using conic::Affine;

Affine lifted_port_block(const Interconnection& m, const Affine& y_local, bool inputs);

namespace {

std::vector<int> offsets(const Interconnection& m) {
    std::vector<int> off(m.count() + 1, 0);
    for (int i = 0; i < m.count(); ++i) off[i + 1] = off[i] + m.port_dim(i);
    return off;
}

Mat stack_joint(const Interconnection& m, const Mat& x) {
    const Mat t = port_permutation(m);
    return t.transpose() * x * t;
}

Mat effective_pattern(const Interconnection& m, const LocalizationOptions& opts) {
    const int n = m.count();
    if (opts.mode == StructureMode::BlockDiagonal) return Mat::Identity(n, n);
    if (opts.pattern.size() == 0) return Mat::Ones(n, n);
    require(opts.pattern.rows() == n && opts.pattern.cols() == n, ErrorKind::DimensionMismatch,
            "closest_localization: pattern must be N x N");
    return opts.pattern;
}

// Decision variables of one coefficient: a symmetric joint matrix whose
// (i, j) block is free when pattern(i, j) is set and zero otherwise.
Affine joint_variable(conic::Program& prog, const Interconnection& m, const Mat& pattern, const std::string& name) {
    const int n = m.count();
    std::vector<std::vector<Affine>> blocks(n, std::vector<Affine>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const int di = m.port_dim(i), dj = m.port_dim(j);
            const std::string tag = name + "_" + std::to_string(i) + "_" + std::to_string(j);
            if (i == j) {
                blocks[i][i] = pattern(i, i) != 0.0 ? prog.add_symmetric(tag, di) : Affine::zeros(di, di);
            } else if (pattern(i, j) != 0.0 || pattern(j, i) != 0.0) {
                blocks[i][j] = prog.add_matrix(tag, di, dj);
                blocks[j][i] = blocks[i][j].transpose();
            } else {
                blocks[i][j] = Affine::zeros(di, dj);
                blocks[j][i] = Affine::zeros(dj, di);
            }
        }
    return conic::grid(blocks);
}

struct JointVars {
    Affine x1, x2, x3;
    Affine y_local;
};

JointVars add_joint(conic::Program& prog, const Interconnection& m, const Mat& pattern) {
    JointVars v;
    v.x1 = joint_variable(prog, m, pattern, "X1");
    v.x2 = joint_variable(prog, m, pattern, "X2");
    v.x3 = joint_variable(prog, m, pattern, "X3");
    const Mat t = port_permutation(m);
    const Affine c1 = conic::congruence(t, v.x1), c2 = conic::congruence(t, v.x2), c3 = conic::congruence(t, v.x3);
    v.y_local = conic::grid({{c1, c2}, {c2, c3}});
    return v;
}

// Selects the input (or output) rows of both halves of Y_L.
Mat port_selector(const Interconnection& m, bool inputs) {
    const int nv = m.n_v(), ny = m.n_y(), p = nv + ny;
    const int k = inputs ? nv : ny;
    Mat s = Mat::Zero(2 * p, 2 * k);
    const int first = inputs ? 0 : nv;
    for (int h = 0; h < 2; ++h)
        for (int r = 0; r < k; ++r) s(h * p + first + r, h * k + r) = 1.0;
    return s;
}

void add_structure(conic::Program& prog, const Interconnection& m, const JointVars& v,
                   const LocalizationOptions& opts) {
    if (opts.sign_constraints) {
        if (m.n_v() > 0) prog.add_psd(lifted_port_block(m, v.y_local, true), "input sign");
        if (m.n_y() > 0) prog.add_nsd(lifted_port_block(m, v.y_local, false), "output sign");
    }
    const std::vector<int> off = offsets(m);
    for (const auto& b : opts.bounds) {
        require(b.subsystem >= 0 && b.subsystem < m.count(), ErrorKind::InvalidArgument,
                "block bound: subsystem out of range");
        require(b.coefficient >= 1 && b.coefficient <= 3, ErrorKind::InvalidArgument,
                "block bound: coefficient must be 1, 2 or 3");
        const Affine& x = b.coefficient == 1 ? v.x1 : (b.coefficient == 2 ? v.x2 : v.x3);
        const int start = off[b.subsystem] + (b.input_block ? 0 : m.nv_parts[b.subsystem]);
        const int size = b.input_block ? m.nv_parts[b.subsystem] : m.ny_parts[b.subsystem];
        const Affine blk = x.block(start, start, size, size);
        const Mat lvl = b.level * Mat::Identity(size, size);
        prog.add_nsd(b.upper ? blk - Affine(lvl) : Affine(lvl) - blk, "block bound");
    }
}

JointMultiplier joint_value(const conic::SolveReport& rep, const JointVars& v) {
    return {symmetrize(rep.value(v.x1)), symmetrize(rep.value(v.x2)), symmetrize(rep.value(v.x3))};
}

double lifted_lambda_min(const Interconnection& m, const Mat& y_local) {
    const Mat q1 = gac_q1(m);
    return lambda_min(q1.transpose() * y_local * q1);
}

// Least-norm correction of the free joint entries onto G = 0. Kept only when
// it lowers the distance and the sign pattern still holds.
void polish_exact(const Interconnection& m, const QuadMultiplier& wq, const Mat& pattern,
                  const LocalizationOptions& opts, Localization& loc) {
    if (!loc.exact || !opts.bounds.empty()) return;
    const std::vector<int> off = offsets(m);
    const int p = off.back();
    struct Entry {
        int coef, r, c;
    };
    std::vector<Entry> entries;
    for (int cf = 0; cf < 3; ++cf)
        for (int i = 0; i < m.count(); ++i)
            for (int j = i; j < m.count(); ++j) {
                if (pattern(i, j) == 0.0 && pattern(j, i) == 0.0) continue;
                for (int r = off[i]; r < off[i + 1]; ++r)
                    for (int c = off[j]; c < off[j + 1]; ++c)
                        if (i != j || c >= r) entries.push_back({cf, r, c});
            }
    const auto g_of = [&](const JointMultiplier& x) { return gac_quadratic(m, local_lift(m, x), wq); };
    const JointMultiplier zero{Mat::Zero(p, p), Mat::Zero(p, p), Mat::Zero(p, p)};
    const Mat g0 = g_of(zero);
    Mat a(g0.size(), static_cast<Eigen::Index>(entries.size()));
    for (std::size_t k = 0; k < entries.size(); ++k) {
        JointMultiplier e = zero;
        Mat& x = entries[k].coef == 0 ? e.X1 : (entries[k].coef == 1 ? e.X2 : e.X3);
        x(entries[k].r, entries[k].c) = x(entries[k].c, entries[k].r) = 1.0;
        a.col(static_cast<Eigen::Index>(k)) = (g_of(e) - g0).reshaped();
    }
    const Vec delta = a.completeOrthogonalDecomposition().solve(Vec(-g_of(loc.joint).reshaped()));
    JointMultiplier x = loc.joint;
    for (std::size_t k = 0; k < entries.size(); ++k) {
        Mat& xm = entries[k].coef == 0 ? x.X1 : (entries[k].coef == 1 ? x.X2 : x.X3);
        xm(entries[k].r, entries[k].c) += delta(static_cast<Eigen::Index>(k));
        if (entries[k].r != entries[k].c) xm(entries[k].c, entries[k].r) = xm(entries[k].r, entries[k].c);
    }
    const Mat yl = local_lift(m, x);
    const Mat g = gac_quadratic(m, yl, wq);
    const double dist = sigma_max(g);
    const double tol = opts.solver.feas_tol * std::max(1.0, max_abs(yl));
    if (dist >= loc.distance || lambda_max(g) > tol) return;
    if (opts.sign_constraints) {
        if (m.n_v() > 0 && !is_psd(lifted_port_block(m, Affine(yl), true).constant(), tol)) return;
        if (m.n_y() > 0 && !is_nsd(lifted_port_block(m, Affine(yl), false).constant(), tol)) return;
    }
    loc.joint = x;
    loc.multipliers = diagonal_blocks(m, x);
    loc.distance = dist;
}

}  // namespace

Affine lifted_port_block(const Interconnection& m, const Affine& y_local, bool inputs) {
    const int p = m.total_port_dim();
    require(y_local.rows() == 2 * p && y_local.cols() == 2 * p, ErrorKind::DimensionMismatch,
            "lifted_port_block: Y_L has the wrong size");
    return conic::congruence(port_selector(m, inputs), y_local);
}

JointMultiplier joint(const LocalProblemSet& qs) {
    std::vector<Mat> x1, x2, x3;
    for (const auto& q : qs) {
        q.check();
        x1.push_back(q.X1);
        x2.push_back(q.X2);
        x3.push_back(q.X3);
    }
    return {blkdiag(x1), blkdiag(x2), blkdiag(x3)};
}

LocalProblemSet diagonal_blocks(const Interconnection& m, const JointMultiplier& x) {
    const std::vector<int> off = offsets(m);
    require(x.X1.rows() == off.back() && x.X2.rows() == off.back() && x.X3.rows() == off.back(),
            ErrorKind::DimensionMismatch, "diagonal_blocks: joint multiplier has the wrong size");
    LocalProblemSet out;
    for (int i = 0; i < m.count(); ++i) {
        const int o = off[i], d = m.port_dim(i);
        out.push_back({x.X1.block(o, o, d, d), x.X2.block(o, o, d, d), x.X3.block(o, o, d, d), m.nv_parts[i]});
    }
    return out;
}

Mat local_lift(const Interconnection& m, const JointMultiplier& x) {
    const int p = m.total_port_dim();
    require(x.X1.rows() == p && x.X2.rows() == p && x.X3.rows() == p, ErrorKind::DimensionMismatch,
            "local_lift: joint multiplier has the wrong size");
    const Mat c2 = stack_joint(m, x.X2);
    return block_matrix({{stack_joint(m, x.X1), c2}, {c2.transpose(), stack_joint(m, x.X3)}});
}

double localization_distance(const Interconnection& m, const LocalProblemSet& xs, const QuadMultiplier& wq,
                             double feas_tol) {
    const Mat g = gac_quadratic(m, xs, wq);
    const double top = lambda_max(g);
    if (top > feas_tol * std::max(1.0, max_abs(g))) {
        std::ostringstream os;
        os << "admissibility matrix has eigenvalue " << top << " > 0";
        fail(ErrorKind::NotALocalization, os.str());
    }
    return sigma_max(g);
}

Localization make_localization(const Interconnection& m, const JointMultiplier& x, const QuadMultiplier& wq,
                               double feas_tol, double exact_tol) {
    const Mat yl = local_lift(m, x);
    const Mat g = gac_quadratic(m, yl, wq);
    const double top = lambda_max(g);
    if (top > feas_tol * std::max(1.0, max_abs(g))) {
        std::ostringstream os;
        os << "admissibility matrix has eigenvalue " << top << " > 0";
        fail(ErrorKind::NotALocalization, os.str());
    }
    Localization loc;
    loc.joint = x;
    loc.multipliers = diagonal_blocks(m, x);
    loc.distance = sigma_max(g);
    loc.exact = loc.distance <= exact_tol;
    loc.t_star = lifted_lambda_min(m, yl);
    return loc;
}

Localization closest_localization(const Interconnection& m, const QuadMultiplier& wq,
                                  const LocalizationOptions& opts) {
    m.check();
    wq.check();
    const Mat pattern = effective_pattern(m, opts);
    const Mat q1 = gac_q1(m);
    const Eigen::Index nl = q1.cols();
    const double relax = opts.relax * std::max(1.0, max_abs(global_lift(wq)));
    const Mat relax_id = relax * Mat::Identity(q1.cols(), q1.cols());

    if (opts.objective == ClosestObjective::Distance) {
        conic::Program p;
        const JointVars v = add_joint(p, m, pattern);
        const Affine d = p.add_scalar("D");
        const Affine g = gac_quadratic(m, v.y_local, wq);
        p.add_nsd(g - Affine(relax_id), "admissibility");
        p.add_nsd(-g - conic::scaled(d, Mat::Identity(g.rows(), g.rows())), "distance");
        add_structure(p, m, v, opts);
        p.minimize(d);
        const conic::SolveReport r = conic::solve(p, opts.solver);
        if (!r.ok()) {
            std::ostringstream os;
            os << "no localization satisfies the admissibility and sign constraints (status "
               << conic::to_string(r.status) << ")";
            fail(ErrorKind::Infeasible, os.str());
        }
        const JointMultiplier x = joint_value(r, v);
        const Mat yl = local_lift(m, x);
        Localization loc;
        loc.joint = x;
        loc.multipliers = diagonal_blocks(m, x);
        loc.distance = sigma_max(gac_quadratic(m, yl, wq));
        loc.exact = loc.distance <= opts.exact_tol;
        loc.t_star = lifted_lambda_min(m, yl);
        polish_exact(m, wq, pattern, opts, loc);
        return loc;
    }

    // Stage 1: max t with t I <= Q1^T Y_L Q1.
    conic::Program p1;
    const JointVars v1 = add_joint(p1, m, pattern);
    const Affine t = p1.add_scalar("t");
    const Affine g1 = gac_quadratic(m, v1.y_local, wq);
    p1.add_nsd(conic::scaled(t, Mat::Identity(nl, nl)) - conic::congruence(q1, v1.y_local), "t bound");
    p1.add_nsd(g1 - Affine(relax_id), "admissibility");
    add_structure(p1, m, v1, opts);
    p1.minimize(-t);
    const conic::SolveReport r1 = conic::solve(p1, opts.solver);
    if (!r1.ok()) {
        std::ostringstream os;
        os << "no localization satisfies the admissibility and sign constraints (status "
           << conic::to_string(r1.status) << ")";
        fail(ErrorKind::Infeasible, os.str());
    }
    const double t_star = r1.scalar(t);
    JointMultiplier best = joint_value(r1, v1);

    // Stage 2: among the maximizers, min D with G >= -D I.
    conic::Program p2;
    const JointVars v2 = add_joint(p2, m, pattern);
    const Affine d = p2.add_scalar("D");
    const Affine g2 = gac_quadratic(m, v2.y_local, wq);
    const double slack = 1e-6 * std::max(1.0, std::abs(t_star));
    p2.add_nsd(Affine((t_star - slack) * Mat::Identity(nl, nl)) - conic::congruence(q1, v2.y_local), "t bound");
    p2.add_nsd(g2 - Affine(relax_id), "admissibility");
    p2.add_nsd(-g2 - conic::scaled(d, Mat::Identity(g2.rows(), g2.rows())), "distance");
    add_structure(p2, m, v2, opts);
    p2.minimize(d);
    try {
        const conic::SolveReport r2 = conic::solve(p2, opts.solver);
        if (r2.ok()) best = joint_value(r2, v2);
    } catch (const Error&) {
        // keep the stage 1 point
    }

    const Mat yl = local_lift(m, best);
    const Mat g = gac_quadratic(m, yl, wq);
    Localization loc;
    loc.joint = best;
    loc.multipliers = diagonal_blocks(m, best);
    loc.distance = sigma_max(g);
    loc.exact = loc.distance <= opts.exact_tol;
    loc.t_star = t_star;
    polish_exact(m, wq, pattern, opts, loc);
    return loc;
}

double localization_gap(double gamma_l, double gamma_g) {
    const double sq = gamma_l * gamma_l - gamma_g * gamma_g;
    const double scale = std::max(1.0, gamma_g * gamma_g);
    if (sq < -1e-12 * scale) {
        std::ostringstream os;
        os << "gamma_L^2 - gamma_G^2 = " << sq << " < 0";
        fail(ErrorKind::NegativeGapSquared, os.str());
    }
    return std::sqrt(std::max(0.0, sq));
}

bool dominates(const Localization& closest, const Localization& other, const Interconnection& m, double feas_tol) {
    const Mat q1 = gac_q1(m);
    const Mat diff = local_lift(m, other.joint) - local_lift(m, closest.joint);
    return lambda_max(q1.transpose() * diff * q1) <= feas_tol;
}

}  // namespace iqcloc
