#include "iqcloc/grouping.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>

namespace iqcloc {

using conic::Affine;

namespace {

std::vector<int> port_sizes(const Interconnection& m) {
    std::vector<int> sizes;
    for (int i = 0; i < m.count(); ++i) sizes.push_back(m.port_dim(i));
    return sizes;
}

LocalizationOptions xstep_options(const GroupOptions& opts, const Mat& pattern) {
    LocalizationOptions lo;
    lo.solver = opts.solver;
    lo.mode = StructureMode::FullBlock;
    lo.objective = ClosestObjective::Distance;
    lo.pattern = pattern;
    lo.sign_constraints = opts.sign_constraints;
    lo.relax = opts.relax;
    return lo;
}

double distance_of(const Interconnection& m, const QuadMultiplier& wq, const JointMultiplier& y) {
    return sigma_max(gac_quadratic(m, local_lift(m, y), wq));
}

Mat support(const Mat& p, double tol) { return (p.array() > tol).cast<double>().matrix(); }

// Divides each supported block of y by p(i, j); unsupported blocks keep prev.
JointMultiplier unscale(const Mat& p, const JointMultiplier& y, const JointMultiplier& prev,
                        const Interconnection& m, double tol) {
    const std::vector<int> sizes = port_sizes(m);
    JointMultiplier out = prev;
    Mat* dst[3] = {&out.X1, &out.X2, &out.X3};
    const Mat* src[3] = {&y.X1, &y.X2, &y.X3};
    int oi = 0;
    for (int i = 0; i < m.count(); ++i) {
        int oj = 0;
        for (int j = 0; j < m.count(); ++j) {
            if (p(i, j) > tol)
                for (int c = 0; c < 3; ++c)
                    dst[c]->block(oi, oj, sizes[i], sizes[j]) = src[c]->block(oi, oj, sizes[i], sizes[j]) / p(i, j);
            oj += sizes[j];
        }
        oi += sizes[i];
    }
    return out;
}

struct XStep {
    JointMultiplier x;
    double distance = 0.0;
};

XStep x_step(const Interconnection& m, const QuadMultiplier& wq, const Mat& p, const JointMultiplier& prev,
             const GroupOptions& opts) {
    const Localization loc = closest_localization(m, wq, xstep_options(opts, support(p, opts.support_tol)));
    return {unscale(p, loc.joint, prev, m, opts.support_tol), loc.distance};
}

// min D + eta sum_{i<j} P_ij over the relaxed membership matrix at fixed X.
// Returns nullopt when the solver does not reach a feasible point.
std::optional<Mat> p_step(const Interconnection& m, const QuadMultiplier& wq, const JointMultiplier& x, int nbar,
                          double eta, const GroupOptions& opts) {
    const int n = m.count();
    conic::Program prog;
    Affine pmat(Mat::Identity(n, n));
    Affine yl(local_lift(m, hadamard_blocks(Mat::Identity(n, n), x, m)));
    Affine penalty = Affine::zeros(1, 1);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const Affine pij = prog.add_scalar("P_" + std::to_string(i) + "_" + std::to_string(j));
            Mat e = Mat::Zero(n, n);
            e(i, j) = e(j, i) = 1.0;
            pmat += conic::scaled(pij, e);
            yl += conic::scaled(pij, local_lift(m, hadamard_blocks(e, x, m)));
            prog.add_psd(pij, "P >= 0");
            prog.add_nsd(pij - Affine(Mat::Ones(1, 1)), "P <= 1");
            penalty += pij;
        }
    prog.add_psd(pmat, "P psd");
    prog.add_nsd(pmat - Affine(static_cast<double>(nbar) * Mat::Identity(n, n)), "capacity");
    const Affine d = prog.add_scalar("D");
    const Affine g = gac_quadratic(m, yl, wq);
    const double relax = opts.relax * std::max(1.0, max_abs(global_lift(wq)));
    prog.add_nsd(g - Affine(relax * Mat::Identity(g.rows(), g.rows())), "admissibility");
    prog.add_nsd(-g - conic::scaled(d, Mat::Identity(g.rows(), g.rows())), "distance");
    if (opts.sign_constraints) {
        if (m.n_v() > 0) prog.add_psd(lifted_port_block(m, yl, true), "input sign");
        if (m.n_y() > 0) prog.add_nsd(lifted_port_block(m, yl, false), "output sign");
    }
    prog.minimize(d + eta * penalty);
    try {
        const conic::SolveReport rep = conic::solve(prog, opts.solver);
        if (!rep.ok()) return std::nullopt;
        Mat p = symmetrize(rep.value(pmat));
        p = p.cwiseMax(0.0).cwiseMin(1.0);
        p = (p.array() > opts.support_tol).select(p, 0.0);
        p.diagonal().setOnes();
        return p;
    } catch (const Error&) {
        return std::nullopt;
    }
}

double affinity(const Mat& relaxed, int i, const std::vector<int>& group) {
    double s = 0.0;
    for (int j : group)
        if (j != i) s += relaxed(i, j);
    return s;
}

// Removes the member least attached to the rest of the group.
int detach_weakest(const Mat& relaxed, std::vector<int>& group) {
    auto weakest = std::min_element(group.begin(), group.end(), [&](int a, int b) {
        return affinity(relaxed, a, group) < affinity(relaxed, b, group);
    });
    const int out = *weakest;
    group.erase(weakest);
    return out;
}

void normalize(Groups& groups) {
    for (auto& g : groups) std::sort(g.begin(), g.end());
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

}  // namespace

Mat assignment_matrix(const Groups& groups, int n) {
    Mat rho = Mat::Zero(n, static_cast<Eigen::Index>(groups.size()));
    std::vector<int> seen(n, 0);
    for (std::size_t j = 0; j < groups.size(); ++j) {
        require(!groups[j].empty(), ErrorKind::InvalidArgument, "assignment_matrix: empty group");
        for (int i : groups[j]) {
            require(i >= 0 && i < n, ErrorKind::InvalidArgument, "assignment_matrix: member out of range");
            require(seen[i]++ == 0, ErrorKind::InvalidArgument, "assignment_matrix: subsystem in two groups");
            rho(i, static_cast<Eigen::Index>(j)) = 1.0;
        }
    }
    for (int i = 0; i < n; ++i)
        require(seen[i] == 1, ErrorKind::InvalidArgument, "assignment_matrix: subsystem without a group");
    return rho;
}

Mat membership_matrix(const Groups& groups, int n) {
    const Mat rho = assignment_matrix(groups, n);
    return rho * rho.transpose();
}

Groups membership_from_P(const Mat& p, double tol) {
    require(p.rows() == p.cols(), ErrorKind::InvalidArgument, "membership_from_P: P must be square");
    const int n = static_cast<int>(p.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = p(i, j);
            require(std::abs(v) <= tol || std::abs(v - 1.0) <= tol, ErrorKind::InvalidArgument,
                    "membership_from_P: P must be binary");
            require(std::abs(v - p(j, i)) <= tol, ErrorKind::InvalidArgument, "membership_from_P: P must be symmetric");
        }
    for (int i = 0; i < n; ++i)
        require(std::abs(p(i, i) - 1.0) <= tol, ErrorKind::InvalidArgument, "membership_from_P: P_ii must be 1");
    const auto on = [&](int i, int j) { return std::abs(p(i, j) - 1.0) <= tol; };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                if (on(i, j) && on(j, k) && !on(i, k)) {
                    std::ostringstream os;
                    os << "P(" << i << "," << j << ") = P(" << j << "," << k << ") = 1 but P(" << i << "," << k
                       << ") = 0";
                    fail(ErrorKind::NotEquivalence, os.str());
                }
    Groups groups;
    std::vector<int> label(n, -1);
    for (int i = 0; i < n; ++i) {
        if (label[i] >= 0) continue;
        label[i] = static_cast<int>(groups.size());
        groups.push_back({i});
        for (int j = i + 1; j < n; ++j)
            if (on(i, j)) {
                label[j] = label[i];
                groups.back().push_back(j);
            }
    }
    return groups;
}

Mat hadamard_blocks(const Mat& p, const Mat& x, const std::vector<int>& sizes) {
    const int n = static_cast<int>(sizes.size());
    require(p.rows() == n && p.cols() == n, ErrorKind::DimensionMismatch,
            "hadamard_blocks: P must be N x N for N blocks");
    const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
    require(x.rows() == total && x.cols() == total, ErrorKind::DimensionMismatch,
            "hadamard_blocks: block sizes do not match the matrix");
    Mat out = x;
    int oi = 0;
    for (int i = 0; i < n; ++i) {
        int oj = 0;
        for (int j = 0; j < n; ++j) {
            out.block(oi, oj, sizes[i], sizes[j]) *= p(i, j);
            oj += sizes[j];
        }
        oi += sizes[i];
    }
    return out;
}

JointMultiplier hadamard_blocks(const Mat& p, const JointMultiplier& x, const Interconnection& m) {
    const std::vector<int> sizes = port_sizes(m);
    return {hadamard_blocks(p, x.X1, sizes), hadamard_blocks(p, x.X2, sizes), hadamard_blocks(p, x.X3, sizes)};
}

Localization partition_localization(const Interconnection& m, const QuadMultiplier& wq, const Groups& groups,
                                    const GroupOptions& opts) {
    return closest_localization(m, wq, xstep_options(opts, membership_matrix(groups, m.count())));
}

Groups round_membership(const Mat& relaxed, int ng, int nbar, double threshold) {
    const int n = static_cast<int>(relaxed.rows());
    require(relaxed.cols() == n, ErrorKind::DimensionMismatch, "round_membership: P must be square");
    require(ng >= 1 && nbar >= 1 && ng * nbar >= n && ng <= n, ErrorKind::InvalidArgument,
            "round_membership: needs 1 <= ng <= N and ng * nbar >= N");

    // Threshold, then transitive closure as connected components.
    std::vector<int> label(n, -1);
    Groups groups;
    for (int s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        std::vector<int> stack{s};
        label[s] = static_cast<int>(groups.size());
        groups.push_back({});
        while (!stack.empty()) {
            const int i = stack.back();
            stack.pop_back();
            groups.back().push_back(i);
            for (int j = 0; j < n; ++j)
                if (label[j] < 0 && j != i && 0.5 * (relaxed(i, j) + relaxed(j, i)) >= threshold) {
                    label[j] = label[s];
                    stack.push_back(j);
                }
        }
    }

    // Capacity split, largest group first.
    for (;;) {
        auto big = std::max_element(groups.begin(), groups.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
        if (static_cast<int>(big->size()) <= nbar) break;
        const int out = detach_weakest(relaxed, *big);
        groups.push_back({out});
    }

    // Merge the most attached pair that fits until ng groups remain.
    while (static_cast<int>(groups.size()) > ng) {
        double best = -1.0;
        std::size_t ba = 0, bb = 0;
        for (std::size_t a = 0; a < groups.size(); ++a)
            for (std::size_t b = a + 1; b < groups.size(); ++b) {
                if (static_cast<int>(groups[a].size() + groups[b].size()) > nbar) continue;
                double s = 0.0;
                for (int i : groups[a])
                    for (int j : groups[b]) s += relaxed(i, j);
                s /= static_cast<double>(groups[a].size() * groups[b].size());
                if (s > best) {
                    best = s;
                    ba = a;
                    bb = b;
                }
            }
        if (best < 0.0) break;
        groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
        groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bb));
    }

    // Split the largest group until ng groups exist.
    while (static_cast<int>(groups.size()) < ng) {
        auto big = std::max_element(groups.begin(), groups.end(),
                                    [](const auto& a, const auto& b) { return a.size() < b.size(); });
        const int out = detach_weakest(relaxed, *big);
        groups.push_back({out});
    }
    normalize(groups);
    return groups;
}

GroupLocalization group_localize(const Interconnection& m, const QuadMultiplier& wq, int ng, int nbar,
                                 const GroupOptions& opts) {
    m.check();
    wq.check();
    const int n = m.count();
    require(nbar >= 1 && nbar < n, ErrorKind::InvalidArgument, "group_localize: needs 1 <= Nbar < N");
    require(ng >= 1 && ng <= n && ng * nbar >= n, ErrorKind::InvalidArgument,
            "group_localize: needs Ng * Nbar >= N and Ng <= N");
    require(opts.max_iter >= 1, ErrorKind::InvalidArgument, "group_localize: max_iter must be positive");

    // All-ones shrunk so that sigma_max(P) = Nbar.
    const double alpha = n > 1 ? static_cast<double>(nbar - 1) / static_cast<double>(n - 1) : 0.0;
    Mat p = alpha * Mat::Ones(n, n) + (1.0 - alpha) * Mat::Identity(n, n);
    const int total = m.total_port_dim();
    const JointMultiplier zero{Mat::Zero(total, total), Mat::Zero(total, total), Mat::Zero(total, total)};
    XStep xs = x_step(m, wq, p, zero, opts);
    const double eta = opts.eta_scale * xs.distance;

    GroupLocalization out;
    double d_prev = xs.distance;
    for (int k = 1; k <= opts.max_iter; ++k) {
        if (nbar > 1) {
            if (const auto next = p_step(m, wq, xs.x, nbar, eta, opts)) p = *next;
        }
        out.distance_before.push_back(distance_of(m, wq, hadamard_blocks(p, xs.x, m)));
        xs = x_step(m, wq, p, xs.x, opts);
        out.distance_after.push_back(xs.distance);
        out.iterations = k;
        if (std::abs(xs.distance - d_prev) < opts.tol) {
            out.converged = true;
            break;
        }
        d_prev = xs.distance;
    }

    out.relaxed_P = p;
    out.groups = round_membership(p, ng, nbar, opts.round_threshold);
    out.P = membership_matrix(out.groups, n);
    const Localization fin = partition_localization(m, wq, out.groups, opts);
    out.multipliers = fin.joint;
    out.distance = fin.distance;
    return out;
}

}  // namespace iqcloc
