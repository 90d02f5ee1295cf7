#include "iqcloc/interconnect.hpp"

#include "iqcloc/error.hpp"

#include <numeric>
#include <sstream>

namespace iqcloc {

namespace {

void check_partition(const Interconnection& m, const std::vector<int>& dims, const char* what) {
    require(static_cast<int>(dims.size()) == m.count(), ErrorKind::DimensionMismatch,
            std::string(what) + ": one multiplier per subsystem expected");
    for (int i = 0; i < m.count(); ++i) {
        if (dims[i] != m.port_dim(i)) {
            std::ostringstream os;
            os << what << ": multiplier " << i << " has size " << dims[i] << ", ports need " << m.port_dim(i);
            fail(ErrorKind::DimensionMismatch, os.str());
        }
    }
}

void check_global(const Interconnection& m, int dim, int n_in, const char* what) {
    if (dim != m.n_w() + m.n_z() || n_in != m.n_w()) {
        std::ostringstream os;
        os << what << ": global multiplier is " << dim << " with input size " << n_in << ", expected "
           << m.n_w() + m.n_z() << " with " << m.n_w();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
}

void require_well_posed(const Interconnection& m, const char* what) {
    if (!m.well_posed())
        fail(ErrorKind::NotWellPosed, std::string(what) + ": M12^T M12 or M21 M21^T is not invertible");
}

std::vector<Mat> matrices(const std::vector<Multiplier>& xs) {
    std::vector<Mat> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(x.matrix());
    return out;
}

struct Blocks {
    Mat x11, x12, x22;
};

Blocks split_stacked(const Interconnection& m, const Mat& s) {
    const int nv = m.n_v(), ny = m.n_y();
    return {s.topLeftCorner(nv, nv), s.topRightCorner(nv, ny), s.bottomRightCorner(ny, ny)};
}

bool well_conditioned_gram(const Mat& g) {
    if (g.size() == 0) return true;
    const Vec sv = singular_values(g);
    return sv(sv.size() - 1) > 1e-8 * sv(0);
}

}  // namespace

int Interconnection::v_offset(int i) const { return std::accumulate(nv_parts.begin(), nv_parts.begin() + i, 0); }
int Interconnection::y_offset(int i) const { return std::accumulate(ny_parts.begin(), ny_parts.begin() + i, 0); }

Mat Interconnection::matrix() const { return block_matrix({{M11, M12}, {M21, M22}}); }

void Interconnection::check() const {
    const bool shapes = M12.rows() == M11.rows() && M21.cols() == M11.cols() && M22.rows() == M21.rows() &&
                        M22.cols() == M12.cols();
    require(shapes, ErrorKind::DimensionMismatch, "interconnection blocks do not form a matrix");
    require(!nv_parts.empty() && nv_parts.size() == ny_parts.size(), ErrorKind::DimensionMismatch,
            "port partitions must be nonempty and of equal length");
    for (std::size_t i = 0; i < nv_parts.size(); ++i)
        require(nv_parts[i] > 0 && ny_parts[i] > 0, ErrorKind::DimensionMismatch, "port partitions must be positive");
    const int sv = std::accumulate(nv_parts.begin(), nv_parts.end(), 0);
    const int sy = std::accumulate(ny_parts.begin(), ny_parts.end(), 0);
    if (sv != n_v() || sy != n_y()) {
        std::ostringstream os;
        os << "port partitions sum to (" << sv << ", " << sy << "), M11 is " << n_v() << "x" << n_y();
        fail(ErrorKind::DimensionMismatch, os.str());
    }
}

bool Interconnection::well_posed() const {
    return M12.cols() > 0 && M21.rows() > 0 && well_conditioned_gram(M12.transpose() * M12) &&
           well_conditioned_gram(M21 * M21.transpose()) && numerical_rank(M12) == M12.cols() &&
           numerical_rank(M21) == M21.rows();
}

Interconnection Interconnection::identity(int n_in, int n_out) {
    Interconnection m;
    m.M11 = Mat::Zero(n_in, n_out);
    m.M12 = Mat::Identity(n_in, n_in);
    m.M21 = Mat::Identity(n_out, n_out);
    m.M22 = Mat::Zero(n_out, n_in);
    m.nv_parts = {n_in};
    m.ny_parts = {n_out};
    return m;
}

Mat port_permutation(const Interconnection& m) {
    const int total = m.total_port_dim();
    Mat t = Mat::Zero(total, total);
    int row = 0;
    for (int i = 0; i < m.count(); ++i) {
        for (int k = 0; k < m.nv_parts[i]; ++k) t(row++, m.v_offset(i) + k) = 1.0;
        for (int k = 0; k < m.ny_parts[i]; ++k) t(row++, m.n_v() + m.y_offset(i) + k) = 1.0;
    }
    return t;
}

Mat stack_ports(const Interconnection& m, const std::vector<Mat>& xs) {
    std::vector<int> dims;
    for (const auto& x : xs) dims.push_back(static_cast<int>(x.rows()));
    check_partition(m, dims, "stack_ports");
    const Mat t = port_permutation(m);
    return t.transpose() * blkdiag(xs) * t;
}

Mat gac_matrix(const Interconnection& m, const std::vector<Multiplier>& xs, const Multiplier& w) {
    m.check();
    std::vector<int> dims;
    for (const auto& x : xs) dims.push_back(x.dim());
    check_partition(m, dims, "gac_matrix");
    for (int i = 0; i < m.count(); ++i)
        require(xs[i].n_in() == m.nv_parts[i], ErrorKind::DimensionMismatch, "gac_matrix: multiplier input size");
    check_global(m, w.dim(), w.n_in(), "gac_matrix");

    const Blocks x = split_stacked(m, stack_ports(m, matrices(xs)));
    const int nv = m.n_v(), ny = m.n_y(), nw = m.n_w(), nz = m.n_z();
    const Mat w11 = w.x11(), w12 = w.x12(), w22 = w.x22();
    // Rows and columns ordered (v, z, y, w).
    const Mat mid = block_matrix({
        {x.x11, Mat::Zero(nv, nz), x.x12, Mat::Zero(nv, nw)},
        {Mat::Zero(nz, nv), -w22, Mat::Zero(nz, ny), -w12.transpose()},
        {x.x12.transpose(), Mat::Zero(ny, nz), x.x22, Mat::Zero(ny, nw)},
        {Mat::Zero(nw, nv), -w12, Mat::Zero(nw, ny), -w11},
    });
    const Mat outer = block_matrix({{m.matrix()}, {Mat::Identity(ny + nw, ny + nw)}});
    return symmetrize(outer.transpose() * mid * outer);
}

conic::Affine gac_matrix(const Interconnection& m, const conic::Affine& x_stacked, const conic::Affine& w) {
    m.check();
    const int nv = m.n_v(), ny = m.n_y(), nw = m.n_w(), nz = m.n_z();
    require(x_stacked.rows() == nv + ny && x_stacked.cols() == nv + ny, ErrorKind::DimensionMismatch,
            "gac_matrix: stacked local multiplier has the wrong size");
    require(w.rows() == nw + nz && w.cols() == nw + nz, ErrorKind::DimensionMismatch,
            "gac_matrix: global multiplier has the wrong size");
    // (y, w) -> (v, y) and (y, w) -> (w, z).
    const Mat local = block_matrix({{m.M11, m.M12}, {Mat::Identity(ny, ny), Mat::Zero(ny, nw)}});
    const Mat global = block_matrix({{Mat::Zero(nw, ny), Mat::Identity(nw, nw)}, {m.M21, m.M22}});
    return conic::sym(conic::congruence(local, x_stacked) - conic::congruence(global, w));
}

Mat gac_wellposed(const Interconnection& m, const std::vector<Multiplier>& xs, const Multiplier& w) {
    m.check();
    require_well_posed(m, "gac_wellposed");
    std::vector<int> dims;
    for (const auto& x : xs) dims.push_back(x.dim());
    check_partition(m, dims, "gac_wellposed");
    check_global(m, w.dim(), w.n_in(), "gac_wellposed");

    const Blocks x = split_stacked(m, stack_ports(m, matrices(xs)));
    const Mat tl = m.M12.transpose() * x.x11 * m.M12 - w.x11();
    const Mat tr = m.M12.transpose() * x.x12 - w.x12() * m.M21;
    const Mat br = x.x22 - m.M21.transpose() * w.x22() * m.M21;
    return symmetrize(block_matrix({{tl, tr}, {tr.transpose(), br}}));
}

Mat gac_q1(const Interconnection& m) {
    const Mat t = block_matrix({{m.M12, m.M11}, {Mat::Zero(m.n_y(), m.n_w()), Mat::Identity(m.n_y(), m.n_y())}});
    return kron(Mat::Identity(2, 2), t);
}

Mat gac_q2(const Interconnection& m) {
    const Mat t = block_matrix({{Mat::Identity(m.n_w(), m.n_w()), Mat::Zero(m.n_w(), m.n_y())}, {m.M22, m.M21}});
    return kron(Mat::Identity(2, 2), t);
}

Mat local_lift(const Interconnection& m, const LocalProblemSet& qs) {
    std::vector<int> dims;
    std::vector<Mat> x1, x2, x3;
    for (const auto& q : qs) {
        q.check();
        dims.push_back(q.dim());
        x1.push_back(q.X1);
        x2.push_back(q.X2);
        x3.push_back(q.X3);
    }
    check_partition(m, dims, "local_lift");
    for (int i = 0; i < m.count(); ++i)
        require(qs[i].n_in == m.nv_parts[i], ErrorKind::DimensionMismatch, "local_lift: multiplier input size");
    const Mat c2 = stack_ports(m, x2);
    return block_matrix({{stack_ports(m, x1), c2}, {c2.transpose(), stack_ports(m, x3)}});
}

Mat global_lift(const QuadMultiplier& wq) {
    wq.check();
    return block_matrix({{wq.X1, wq.X2}, {wq.X2.transpose(), wq.X3}});
}

Mat gac_quadratic(const Interconnection& m, const LocalProblemSet& qs, const QuadMultiplier& wq) {
    m.check();
    return gac_quadratic(m, local_lift(m, qs), wq);
}

Mat gac_quadratic(const Interconnection& m, const Mat& y_local, const QuadMultiplier& wq) {
    m.check();
    check_global(m, wq.dim(), wq.n_in, "gac_quadratic");
    const Eigen::Index n = 2 * m.total_port_dim();
    require(y_local.rows() == n && y_local.cols() == n, ErrorKind::DimensionMismatch,
            "gac_quadratic: Y_L has the wrong size");
    const Mat q1 = gac_q1(m), q2 = gac_q2(m);
    return symmetrize(q1.transpose() * y_local * q1 - q2.transpose() * global_lift(wq) * q2);
}

conic::Affine gac_quadratic(const Interconnection& m, const conic::Affine& y_local, const QuadMultiplier& wq) {
    m.check();
    check_global(m, wq.dim(), wq.n_in, "gac_quadratic");
    const Eigen::Index n = 2 * m.total_port_dim();
    require(y_local.rows() == n && y_local.cols() == n, ErrorKind::DimensionMismatch,
            "gac_quadratic: Y_L has the wrong size");
    const Mat q2 = gac_q2(m);
    return conic::congruence(gac_q1(m), y_local) - conic::Affine(q2.transpose() * global_lift(wq) * q2);
}

bool is_structured(const QuadMultiplier& q, double tol) {
    const int ni = q.n_in, no = q.n_out();
    return max_abs(q.X1.topRightCorner(ni, no)) <= tol && max_abs(q.X1.bottomRightCorner(no, no)) <= tol &&
           max_abs(q.X2.topLeftCorner(ni, ni)) <= tol && max_abs(q.X2.bottomRightCorner(no, no)) <= tol;
}

Mat gac_structured(const Interconnection& m, const LocalProblemSet& qs, const QuadMultiplier& wq) {
    m.check();
    require_well_posed(m, "gac_structured");
    require(max_abs(m.M11) == 0.0 && max_abs(m.M22) == 0.0, ErrorKind::InvalidArgument,
            "gac_structured: the reduced form needs M11 = 0 and M22 = 0");
    check_global(m, wq.dim(), wq.n_in, "gac_structured");
    wq.check();
    require(is_structured(wq), ErrorKind::InvalidArgument, "gac_structured: global multiplier is not structured");
    std::vector<Mat> a, b, xbar;
    std::vector<int> dims;
    for (const auto& q : qs) {
        q.check();
        require(is_structured(q), ErrorKind::InvalidArgument, "gac_structured: local multiplier is not structured");
        dims.push_back(q.dim());
        a.push_back(q.X1);
        b.push_back(q.X2);
        xbar.push_back(q.X3);
    }
    check_partition(m, dims, "gac_structured");

    const int nw = m.n_w(), ny = m.n_y();
    const Blocks sa = split_stacked(m, stack_ports(m, a));
    const Blocks sb = split_stacked(m, stack_ports(m, b));
    const Blocks sc = split_stacked(m, stack_ports(m, xbar));
    const Multiplier w1(wq.X1, nw), w2(wq.X2, nw), w3(wq.X3, nw);

    const Mat t1 = blkdiag({m.M12.transpose() * sa.x11 * m.M12 - w1.x11(), Mat::Zero(ny, ny)});
    const Mat cross = m.M12.transpose() * sb.x12 - w2.x12() * m.M21;
    const Mat t2 = block_matrix({{Mat::Zero(nw, nw), cross}, {cross.transpose(), Mat::Zero(ny, ny)}});
    const Mat tl = m.M12.transpose() * sc.x11 * m.M12 - w3.x11();
    const Mat tr = m.M12.transpose() * sc.x12 - w3.x12() * m.M21;
    const Mat br = sc.x22 - m.M21.transpose() * w3.x22() * m.M21;
    const Mat t3 = block_matrix({{tl, tr}, {tr.transpose(), br}});
    return symmetrize(block_matrix({{t1, t2}, {t2, t3}}));
}

AdmissibilityReport check_admissible(const Interconnection& m, const LocalProblemSet& qs,
                                     const QuadMultiplier& wq, GacMode mode, double feas_tol, int grid_points,
                                     double grid_lo, double grid_hi) {
    AdmissibilityReport rep;
    rep.mode = mode;
    const Mat g = mode == GacMode::Structured ? gac_structured(m, qs, wq) : gac_quadratic(m, qs, wq);
    rep.lambda_max = lambda_max(g);
    rep.admissible = rep.lambda_max <= feas_tol;
    if (grid_points > 0) {
        rep.grid_points = grid_points;
        for (int k = 0; k < grid_points; ++k) {
            const double gamma =
                grid_points == 1 ? grid_lo : grid_lo + (grid_hi - grid_lo) * k / static_cast<double>(grid_points - 1);
            std::vector<Multiplier> xs;
            for (const auto& q : qs) xs.push_back(eval(q, gamma));
            const Mat gk = gac_matrix(m, xs, eval(wq, gamma));
            if (lambda_max(gk) > feas_tol * std::max(1.0, max_abs(gk))) rep.grid_ok = false;
        }
    }
    return rep;
}

ClosedLoop compose(const Interconnection& m, const std::vector<ClosedLoop>& parts) {
    m.check();
    require(static_cast<int>(parts.size()) == m.count(), ErrorKind::DimensionMismatch,
            "compose: one system per subsystem expected");
    std::vector<Mat> a, b, c, d;
    for (int i = 0; i < m.count(); ++i) {
        parts[i].check();
        if (parts[i].n_v() != m.nv_parts[i] || parts[i].n_y() != m.ny_parts[i]) {
            std::ostringstream os;
            os << "compose: system " << i << " has ports (" << parts[i].n_v() << ", " << parts[i].n_y()
               << "), partition needs (" << m.nv_parts[i] << ", " << m.ny_parts[i] << ")";
            fail(ErrorKind::DimensionMismatch, os.str());
        }
        a.push_back(parts[i].A);
        b.push_back(parts[i].B);
        c.push_back(parts[i].C);
        d.push_back(parts[i].D);
    }
    const Mat ab = blkdiag(a), bb = blkdiag(b), cb = blkdiag(c), db = blkdiag(d);
    const int ny = m.n_y();
    const Mat loop = Mat::Identity(ny, ny) - db * m.M11;
    const Eigen::FullPivLU<Mat> lu(loop);
    if (ny > 0 && (!lu.isInvertible() || lu.rcond() < 1e-12))
        fail(ErrorKind::NotWellPosed, "compose: I - D M11 is singular");
    // y = Cy x + Dy w
    const Mat cy = ny > 0 ? Mat(lu.solve(cb)) : Mat::Zero(0, ab.rows());
    const Mat dy = ny > 0 ? Mat(lu.solve(db * m.M12)) : Mat::Zero(0, m.n_w());
    ClosedLoop out;
    out.A = ab + bb * m.M11 * cy;
    out.B = bb * (m.M11 * dy + m.M12);
    out.C = m.M21 * cy;
    out.D = m.M21 * dy + m.M22;
    return out;
}

bool passivable(const Interconnection& m, double bd_tol) {
    m.check();
    require_well_posed(m, "passivable");
    require(m.n_w() == m.n_z(), ErrorKind::DimensionMismatch, "passivable: needs n_w = n_z");
    const Mat g = m.M12.transpose() * m.M12;
    const Mat prod = m.M12 * g.ldlt().solve(m.M21);
    for (int i = 0; i < m.count(); ++i)
        for (int j = 0; j < m.count(); ++j) {
            if (i == j) continue;
            const Mat blk = prod.block(m.v_offset(i), m.y_offset(j), m.nv_parts[i], m.ny_parts[j]);
            if (max_abs(blk) > bd_tol) return false;
        }
    return true;
}

}  // namespace iqcloc
