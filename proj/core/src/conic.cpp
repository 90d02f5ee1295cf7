#include "iqcloc/conic.hpp"

#include "iqcloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace iqcloc::conic {

// ---------------------------------------------------------------------------
// Affine expressions

Affine::Affine(Mat constant) : constant_(std::move(constant)) {}

Affine Affine::zeros(Eigen::Index rows, Eigen::Index cols) { return Affine(Mat::Zero(rows, cols)); }

Affine Affine::variable(int var, Mat coef) {
    Affine a(Mat::Zero(coef.rows(), coef.cols()));
    a.terms_.push_back({var, std::move(coef)});
    return a;
}

void Affine::add_term(int var, const Mat& coef) {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), var,
                               [](const Term& t, int v) { return t.var < v; });
    if (it != terms_.end() && it->var == var) {
        it->coef += coef;
    } else {
        terms_.insert(it, Term{var, coef});
    }
}

Affine Affine::transpose() const {
    Affine out(constant_.transpose());
    out.terms_.reserve(terms_.size());
    for (const auto& t : terms_) out.terms_.push_back({t.var, t.coef.transpose()});
    return out;
}

Affine Affine::block(Eigen::Index r0, Eigen::Index c0, Eigen::Index nr, Eigen::Index nc) const {
    Affine out(constant_.block(r0, c0, nr, nc));
    for (const auto& t : terms_) {
        Mat c = t.coef.block(r0, c0, nr, nc);
        if (max_abs(c) != 0.0) out.terms_.push_back({t.var, std::move(c)});
    }
    return out;
}

Affine Affine::vec() const {
    const Eigen::Index n = constant_.size();
    Affine out(constant_.reshaped(n, 1));
    for (const auto& t : terms_) out.terms_.push_back({t.var, t.coef.reshaped(n, 1)});
    return out;
}

Mat Affine::value(const Vec& y) const {
    Mat v = constant_;
    for (const auto& t : terms_) {
        require(t.var < y.size(), ErrorKind::DimensionMismatch, "Affine::value: assignment too short");
        v += y(t.var) * t.coef;
    }
    return v;
}

Affine& Affine::operator+=(const Affine& rhs) {
    if (constant_.size() == 0 && terms_.empty() && (rows() == 0 || cols() == 0) &&
        (rhs.rows() != 0 && rhs.cols() != 0)) {
        // default-constructed accumulator
        *this = rhs;
        return *this;
    }
    require(rows() == rhs.rows() && cols() == rhs.cols(), ErrorKind::DimensionMismatch,
            "Affine +: shape mismatch");
    constant_ += rhs.constant_;
    for (const auto& t : rhs.terms_) add_term(t.var, t.coef);
    return *this;
}

Affine& Affine::operator-=(const Affine& rhs) { return *this += -1.0 * rhs; }

Affine& Affine::operator*=(double s) {
    constant_ *= s;
    for (auto& t : terms_) t.coef *= s;
    return *this;
}

Affine Affine::left_multiply(const Mat& m, const Affine& a) {
    require(m.cols() == a.rows(), ErrorKind::DimensionMismatch, "Mat * Affine: shape mismatch");
    Affine out(m * a.constant_);
    out.terms_.reserve(a.terms_.size());
    for (const auto& t : a.terms_) out.terms_.push_back({t.var, m * t.coef});
    return out;
}

Affine Affine::right_multiply(const Affine& a, const Mat& m) {
    require(a.cols() == m.rows(), ErrorKind::DimensionMismatch, "Affine * Mat: shape mismatch");
    Affine out(a.constant_ * m);
    out.terms_.reserve(a.terms_.size());
    for (const auto& t : a.terms_) out.terms_.push_back({t.var, t.coef * m});
    return out;
}

Affine sym(const Affine& a) { return 0.5 * (a + a.transpose()); }

Affine grid(const std::vector<std::vector<Affine>>& blocks) {
    if (blocks.empty()) return Affine();
    const std::size_t ncol = blocks.front().size();
    std::vector<Eigen::Index> heights(blocks.size()), widths(ncol);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        require(blocks[i].size() == ncol, ErrorKind::DimensionMismatch, "grid: ragged block rows");
        heights[i] = blocks[i].front().rows();
    }
    for (std::size_t j = 0; j < ncol; ++j) widths[j] = blocks.front()[j].cols();
    Eigen::Index rows = 0, cols = 0;
    for (auto h : heights) rows += h;
    for (auto w : widths) cols += w;

    Affine out = Affine::zeros(rows, cols);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        Eigen::Index c = 0;
        for (std::size_t j = 0; j < ncol; ++j) {
            const Affine& b = blocks[i][j];
            if (b.rows() != heights[i] || b.cols() != widths[j]) {
                std::ostringstream os;
                os << "grid: block (" << i << "," << j << ") is " << b.rows() << "x" << b.cols() << ", expected "
                   << heights[i] << "x" << widths[j];
                fail(ErrorKind::DimensionMismatch, os.str());
            }
            // Embed b into the full-size frame.
            Mat left = Mat::Zero(rows, b.rows());
            left.block(r, 0, b.rows(), b.rows()).setIdentity();
            Mat right = Mat::Zero(b.cols(), cols);
            right.block(0, c, b.cols(), b.cols()).setIdentity();
            if (b.rows() > 0 && b.cols() > 0) out += left * b * right;
            c += widths[j];
        }
        r += heights[i];
    }
    return out;
}

Affine hstack(const std::vector<Affine>& parts) { return grid({parts}); }

Affine vstack(const std::vector<Affine>& parts) {
    std::vector<std::vector<Affine>> g;
    g.reserve(parts.size());
    for (const auto& p : parts) g.push_back({p});
    return grid(g);
}

Affine blkdiag(const std::vector<Affine>& blocks) {
    std::vector<std::vector<Affine>> g(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i)
        for (std::size_t j = 0; j < blocks.size(); ++j)
            g[i].push_back(i == j ? blocks[i] : Affine::zeros(blocks[i].rows(), blocks[j].cols()));
    return grid(g);
}

Affine scaled(const Affine& scalar, const Mat& m) {
    require(scalar.rows() == 1 && scalar.cols() == 1, ErrorKind::DimensionMismatch, "scaled: expects a 1x1 expression");
    Affine out(scalar.constant()(0, 0) * m);
    for (const auto& t : scalar.terms()) out += Affine::variable(t.var, t.coef(0, 0) * m);
    return out;
}

Affine congruence(const Mat& outer, const Affine& middle) { return outer.transpose() * middle * outer; }

// ---------------------------------------------------------------------------
// Program

int Program::reserve(const std::string& name, VarKind kind, int rows, int cols, int count) {
    const int offset = num_scalars_;
    variables_.push_back({name, kind, rows, cols, offset, count});
    num_scalars_ += count;
    return offset;
}

Affine Program::add_scalar(const std::string& name) {
    const int off = reserve(name, VarKind::Scalar, 1, 1, 1);
    return Affine::variable(off, Mat::Ones(1, 1));
}

Affine Program::add_symmetric(const std::string& name, int dim) {
    require(dim >= 0, ErrorKind::InvalidArgument, "add_symmetric: negative dimension");
    const int off = reserve(name, VarKind::Symmetric, dim, dim, dim * (dim + 1) / 2);
    Affine out = Affine::zeros(dim, dim);
    int k = off;
    for (int j = 0; j < dim; ++j) {
        for (int i = 0; i <= j; ++i) {
            Mat e = Mat::Zero(dim, dim);
            e(i, j) = 1.0;
            e(j, i) = 1.0;
            out += Affine::variable(k++, std::move(e));
        }
    }
    return out;
}

Affine Program::add_matrix(const std::string& name, int rows, int cols) {
    const int off = reserve(name, VarKind::Matrix, rows, cols, rows * cols);
    Affine out = Affine::zeros(rows, cols);
    int k = off;
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            Mat e = Mat::Zero(rows, cols);
            e(i, j) = 1.0;
            out += Affine::variable(k++, std::move(e));
        }
    }
    return out;
}

void Program::add_nsd(const Affine& expr, const std::string& label) {
    require(expr.rows() == expr.cols(), ErrorKind::DimensionMismatch,
            "add_nsd: constraint '" + label + "' is not square");
    if (expr.rows() == 0) return;
    constraints_.push_back({sym(expr), label});
}

void Program::add_psd(const Affine& expr, const std::string& label) { add_nsd(-expr, label); }

Affine Program::add_frobenius_sq_bound(const Affine& expr, const std::string& name) {
    Affine s = add_scalar(name);
    const Affine v = expr.vec();
    const Eigen::Index k = v.rows();
    add_psd(grid({{Affine(Mat::Identity(k, k)), v}, {v.transpose(), s}}), name + ":epigraph");
    return s;
}

void Program::minimize(const Affine& objective) {
    require(objective.rows() == 1 && objective.cols() == 1, ErrorKind::DimensionMismatch,
            "minimize: objective must be scalar");
    objective_ = objective;
}

const Variable* Program::find(const std::string& name) const {
    for (const auto& v : variables_)
        if (v.name == name) return &v;
    return nullptr;
}

double Program::max_violation(const Vec& y) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& c : constraints_) worst = std::max(worst, lambda_max(c.expr.value(y)));
    return constraints_.empty() ? 0.0 : worst;
}

std::string_view to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Feasible: return "feasible";
        case Status::Infeasible: return "infeasible";
        case Status::MaxIter: return "max_iter";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// Primal-dual interior point method, HKM direction with Mehrotra
// predictor-corrector, infeasible start.
//
//   primal:  min <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
//   dual:    max b^T y    s.t.  Z = C - sum_i y_i A_i >= 0
//
// Blocks are dense symmetric or diagonal (stored as a column).

namespace {

struct SdpData {
    std::vector<bool> diag;
    std::vector<Mat> C;
    // A[i]: (block, data) pairs for variable i
    std::vector<std::vector<std::pair<int, Mat>>> A;
    Vec b;
};

struct SdpResult {
    bool converged = false;
    bool failed = false;
    int iterations = 0;
    Vec y;
};

double inner(const Mat& a, const Mat& b) { return (a.array() * b.array()).sum(); }

// tr(A T) for symmetric A and arbitrary T (dense), or a^T t (diagonal).
double trace_prod(const Mat& a, const Mat& t, bool diag) {
    if (diag) return a.col(0).dot(t.col(0));
    return (a.array() * t.transpose().array()).sum();
}

double max_step(const Mat& x, const Mat& dx, bool diag) {
    double step = std::numeric_limits<double>::infinity();
    if (diag) {
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            if (dx(i, 0) < 0.0) step = std::min(step, -x(i, 0) / dx(i, 0));
        return step;
    }
    Eigen::LLT<Mat> llt(x);
    if (llt.info() != Eigen::Success) return 0.0;
    const Mat linv = llt.matrixL().solve(Mat::Identity(x.rows(), x.cols()));
    const Mat w = linv * dx * linv.transpose();
    const double lmin = lambda_min(w);
    if (lmin >= 0.0) return step;
    return -1.0 / lmin;
}

SdpResult run_ipm(const SdpData& d, int max_iter) {
    const std::size_t nb = d.C.size();
    const int m = static_cast<int>(d.b.size());

    // per-block list of variables touching it
    std::vector<std::vector<std::pair<int, const Mat*>>> touching(nb);
    for (int i = 0; i < m; ++i)
        for (const auto& [k, a] : d.A[i]) touching[k].push_back({i, &a});

    double ntot = 0.0;
    for (std::size_t k = 0; k < nb; ++k) ntot += static_cast<double>(d.C[k].rows());

    // Initial point scaled to the data.
    std::vector<Mat> X(nb), Z(nb);
    for (std::size_t k = 0; k < nb; ++k) {
        const double nk = static_cast<double>(d.C[k].rows());
        double xi = std::max(10.0, std::sqrt(nk));
        double eta = std::max(10.0, std::sqrt(nk));
        double cnorm = d.C[k].norm();
        eta = std::max(eta, cnorm);
        for (const auto& [i, a] : touching[k]) {
            const double an = a->norm();
            xi = std::max(xi, nk * (1.0 + std::abs(d.b(i))) / (1.0 + an));
            eta = std::max(eta, an);
        }
        if (d.diag[k]) {
            X[k] = Mat::Constant(d.C[k].rows(), 1, xi);
            Z[k] = Mat::Constant(d.C[k].rows(), 1, eta);
        } else {
            X[k] = xi * Mat::Identity(d.C[k].rows(), d.C[k].rows());
            Z[k] = eta * Mat::Identity(d.C[k].rows(), d.C[k].rows());
        }
    }
    Vec y = Vec::Zero(m);

    const double bnorm = d.b.norm();
    double cnorm = 0.0;
    for (const auto& c : d.C) cnorm += c.squaredNorm();
    cnorm = std::sqrt(cnorm);

    SdpResult res;
    Vec y_last_good = y;
    int stalled = 0;
    int flat = 0;
    double best_mu = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iter; ++iter) {
        res.iterations = iter + 1;
        // residuals
        std::vector<Mat> Rd(nb);
        for (std::size_t k = 0; k < nb; ++k) Rd[k] = d.C[k] - Z[k];
        for (int i = 0; i < m; ++i)
            for (const auto& [k, a] : d.A[i]) Rd[k] -= y(i) * a;
        Vec rp = d.b;
        for (int i = 0; i < m; ++i)
            for (const auto& [k, a] : d.A[i]) rp(i) -= inner(a, X[k]);

        double pobj = 0.0, xz = 0.0, rdn = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            pobj += inner(d.C[k], X[k]);
            xz += inner(X[k], Z[k]);
            rdn += Rd[k].squaredNorm();
        }
        const double dobj = d.b.dot(y);
        const double mu = xz / ntot;
        const double pinf = rp.norm() / (1.0 + bnorm);
        const double dinf = std::sqrt(rdn) / (1.0 + cnorm);
        const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        const double relxz = xz / (1.0 + std::abs(pobj) + std::abs(dobj));
        if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) {
            res.failed = true;
            break;
        }
        if (pinf < 1e-8 && dinf < 1e-9 && gap < 1e-7 && relxz < 1e-7) {
            res.converged = true;
            break;
        }
        // Close enough that a breakdown from here on still counts as converged.
        const bool nearly = pinf < 1e-7 && dinf < 1e-8 && gap < 1e-6 && relxz < 1e-6;
        if (nearly) {
            if (mu < 0.5 * best_mu) {
                best_mu = mu;
                flat = 0;
            } else if (++flat >= 4) {
                res.converged = true;
                break;
            }
        }

        // inverses of Z
        std::vector<Mat> Zi(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            if (d.diag[k]) {
                Zi[k] = Z[k].cwiseInverse();
            } else {
                Eigen::LLT<Mat> llt(Z[k]);
                if (llt.info() != Eigen::Success) {
                    res.failed = true;
                    res.converged = nearly;
                    break;
                }
                Zi[k] = llt.solve(Mat::Identity(Z[k].rows(), Z[k].cols()));
                Zi[k] = 0.5 * (Zi[k] + Zi[k].transpose());
            }
        }

        if (res.failed) break;
        y_last_good = y;

        // Schur complement M_ij = tr(A_i X A_j Z^-1)
        Mat M = Mat::Zero(m, m);
        for (std::size_t k = 0; k < nb; ++k) {
            for (const auto& [j, aj] : touching[k]) {
                Mat T = d.diag[k] ? Mat(X[k].cwiseProduct(*aj).cwiseProduct(Zi[k])) : Mat(X[k] * (*aj) * Zi[k]);
                for (const auto& [i, ai] : touching[k]) {
                    if (i < j) continue;
                    M(i, j) += trace_prod(*ai, T, d.diag[k]);
                }
            }
        }
        M = M.selfadjointView<Eigen::Lower>();
        double mdiag = 0.0;
        for (int i = 0; i < m; ++i) mdiag = std::max(mdiag, std::abs(M(i, i)));
        Eigen::LLT<Mat> schur(M);
        if (schur.info() != Eigen::Success) {
            M.diagonal().array() += 1e-13 * std::max(1.0, mdiag);
            schur.compute(M);
        }
        Eigen::LDLT<Mat> schur_ldlt;
        const bool use_ldlt = schur.info() != Eigen::Success;
        if (use_ldlt) schur_ldlt.compute(M);

        auto direction = [&](double sigma_mu, const std::vector<Mat>* dXa, const std::vector<Mat>* dZa,
                             Vec& dy, std::vector<Mat>& dX, std::vector<Mat>& dZ) {
            // R = sigma mu Z^-1 - X Rd Z^-1 - dXa dZa Z^-1
            std::vector<Mat> R(nb);
            for (std::size_t k = 0; k < nb; ++k) {
                if (d.diag[k]) {
                    R[k] = sigma_mu * Zi[k] - X[k].cwiseProduct(Rd[k]).cwiseProduct(Zi[k]);
                    if (dXa) R[k] -= (*dXa)[k].cwiseProduct((*dZa)[k]).cwiseProduct(Zi[k]);
                } else {
                    R[k] = sigma_mu * Zi[k] - X[k] * Rd[k] * Zi[k];
                    if (dXa) R[k] -= (*dXa)[k] * (*dZa)[k] * Zi[k];
                }
            }
            Vec rhs = d.b;
            for (int i = 0; i < m; ++i)
                for (const auto& [k, a] : d.A[i]) rhs(i) -= trace_prod(a, R[k], d.diag[k]);
            dy = use_ldlt ? Vec(schur_ldlt.solve(rhs)) : Vec(schur.solve(rhs));
            dZ = Rd;
            for (int i = 0; i < m; ++i)
                for (const auto& [k, a] : d.A[i]) dZ[k] -= dy(i) * a;
            dX.resize(nb);
            for (std::size_t k = 0; k < nb; ++k) {
                if (d.diag[k]) {
                    dX[k] = R[k] - X[k] + X[k].cwiseProduct(Rd[k] - dZ[k]).cwiseProduct(Zi[k]);
                } else {
                    Mat t = R[k] - X[k] + X[k] * (Rd[k] - dZ[k]) * Zi[k];
                    dX[k] = 0.5 * (t + t.transpose());
                }
            }
        };

        auto step_lengths = [&](const std::vector<Mat>& dX, const std::vector<Mat>& dZ, double& ap, double& ad) {
            ap = std::numeric_limits<double>::infinity();
            ad = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < nb; ++k) {
                ap = std::min(ap, max_step(X[k], dX[k], d.diag[k]));
                ad = std::min(ad, max_step(Z[k], dZ[k], d.diag[k]));
            }
        };

        Vec dy;
        std::vector<Mat> dX, dZ;
        direction(0.0, nullptr, nullptr, dy, dX, dZ);
        double ap = 0.0, ad = 0.0;
        step_lengths(dX, dZ, ap, ad);
        ap = std::min(1.0, ap);
        ad = std::min(1.0, ad);
        double xz_aff = 0.0;
        for (std::size_t k = 0; k < nb; ++k) xz_aff += inner(X[k] + ap * dX[k], Z[k] + ad * dZ[k]);
        const double mu_aff = xz_aff / ntot;
        double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
        sigma = std::clamp(sigma, 0.0, 1.0);

        const std::vector<Mat> dXa = dX, dZa = dZ;
        direction(sigma * mu, &dXa, &dZa, dy, dX, dZ);
        step_lengths(dX, dZ, ap, ad);
        const double tau = 0.95;
        ap = std::min(1.0, tau * ap);
        ad = std::min(1.0, tau * ad);

        // Backtrack until every dense block stays numerically definite.
        auto definite_after = [&](const std::vector<Mat>& base, const std::vector<Mat>& dir, double a) {
            for (std::size_t k = 0; k < nb; ++k) {
                if (d.diag[k]) {
                    if ((base[k] + a * dir[k]).minCoeff() <= 0.0) return false;
                } else {
                    Eigen::LLT<Mat> llt(base[k] + a * dir[k]);
                    if (llt.info() != Eigen::Success) return false;
                }
            }
            return true;
        };
        for (int bt = 0; bt < 40 && ap > 0.0 && !definite_after(X, dX, ap); ++bt) ap *= 0.7;
        for (int bt = 0; bt < 40 && ad > 0.0 && !definite_after(Z, dZ, ad); ++bt) ad *= 0.7;

        for (std::size_t k = 0; k < nb; ++k) {
            X[k] += ap * dX[k];
            Z[k] += ad * dZ[k];
        }
        y += ad * dy;

        if (ap < 1e-9 && ad < 1e-9) {
            if (++stalled >= 3) {
                res.converged = nearly;
                break;
            }
        } else {
            stalled = 0;
        }
        // Accept a slightly looser point when progress has flattened out.
        if (iter > 40 && nearly && ap < 1e-3 && ad < 1e-3) {
            res.converged = true;
            break;
        }
    }
    res.y = res.failed ? y_last_good : y;
    if (!res.y.allFinite()) res.y = Vec::Zero(m);
    return res;
}

// Constraint blocks in "F(y) <= 0" form, plus a diagonal block of scalar
// bounds. Extra variables (the margin) are appended after the user's.
struct Assembly {
    SdpData data;
    int user_vars = 0;
};

Assembly assemble(const Program& p, bool margin, double box, double margin_floor) {
    Assembly as;
    const int n = p.num_scalars();
    as.user_vars = n;
    const int m = n + (margin ? 1 : 0);
    SdpData& d = as.data;
    d.A.assign(m, {});
    d.b = Vec::Zero(m);

    for (const auto& c : p.constraints()) {
        const int k = static_cast<int>(d.C.size());
        const Mat f0 = 0.5 * (c.expr.constant() + c.expr.constant().transpose());
        d.C.push_back(-f0);
        d.diag.push_back(false);
        for (const auto& t : c.expr.terms()) {
            Mat f = 0.5 * (t.coef + t.coef.transpose());
            if (max_abs(f) == 0.0) continue;
            d.A[t.var].push_back({k, f});
        }
        if (margin) {
            const Eigen::Index nk = c.expr.rows();
            d.A[n].push_back({k, -Mat::Identity(nk, nk)});
        }
    }

    // diagonal block: box on every user variable, floor on the margin
    const int rows = 2 * n + (margin ? 1 : 0);
    const int kd = static_cast<int>(d.C.size());
    Mat cdiag(rows, 1);
    for (int i = 0; i < n; ++i) {
        // y_i / box - 1 <= 0 and -y_i / box - 1 <= 0; unit-scaled so the
        // box rows do not dominate the initial point.
        cdiag(2 * i, 0) = 1.0;
        cdiag(2 * i + 1, 0) = 1.0;
        Mat a = Mat::Zero(rows, 1);
        a(2 * i, 0) = 1.0 / box;
        a(2 * i + 1, 0) = -1.0 / box;
        d.A[i].push_back({kd, a});
    }
    if (margin) {
        cdiag(2 * n, 0) = margin_floor;  // -t - floor <= 0
        Mat a = Mat::Zero(rows, 1);
        a(2 * n, 0) = -1.0;
        d.A[n].push_back({kd, a});
    }
    if (rows > 0) {
        d.C.push_back(cdiag);
        d.diag.push_back(true);
    }

    if (margin) {
        d.b(n) = -1.0;  // min t  <=>  max -t
    } else if (p.objective()) {
        for (const auto& t : p.objective()->terms()) d.b(t.var) = -t.coef(0, 0);
    }
    return as;
}

double constant_scale(const Program& p) {
    double s = 0.0;
    for (const auto& c : p.constraints()) s = std::max(s, max_abs(c.expr.constant()));
    return s;
}

}  // namespace

SolveReport solve(const Program& program, const SolveOptions& options) {
    SolveReport rep;
    const int n = program.num_scalars();

    auto finish = [&](const Vec& y) {
        rep.y = y.head(n);
        rep.residual = std::max(0.0, program.max_violation(rep.y));
        if (program.objective()) rep.objective_value = program.objective()->value(rep.y)(0, 0);
    };

    if (program.constraints().empty() && !program.objective()) {
        rep.y = Vec::Zero(n);
        rep.status = Status::Feasible;
        return rep;
    }

    if (program.objective()) {
        Assembly as = assemble(program, false, options.box, 0.0);
        SdpResult r = run_ipm(as.data, options.max_iter);
        rep.iterations = r.iterations;
        finish(r.y);
        if (r.converged && rep.residual <= options.feas_tol) {
            for (int i = 0; i < n; ++i) {
                if (std::abs(rep.y(i)) >= (1.0 - 1e-3) * options.box)
                    fail(ErrorKind::Unbounded, "objective decreases until the variable box is reached");
            }
            rep.status = Status::Optimal;
            return rep;
        }
        // Not converged: decide between infeasible and numerical trouble.
        const Vec y_opt = rep.y;
        const double resid_opt = rep.residual;
        const double obj_opt = rep.objective_value;
        Assembly ph1 = assemble(program, true, options.box, options.margin_scale * std::max(1e-6, constant_scale(program)));
        SdpResult r1 = run_ipm(ph1.data, options.max_iter);
        rep.iterations += r1.iterations;
        const Vec y1 = r1.y.head(n);
        const double resid1 = std::max(0.0, program.max_violation(y1));
        if (resid1 > options.feas_tol) {
            rep.y = y1;
            rep.residual = resid1;
            rep.objective_value = program.objective()->value(y1)(0, 0);
            rep.status = r1.converged ? Status::Infeasible : Status::MaxIter;
            return rep;
        }
        if (resid_opt <= options.feas_tol) {
            rep.y = y_opt;
            rep.residual = resid_opt;
            rep.objective_value = obj_opt;
        } else {
            finish(y1);
        }
        rep.status = Status::MaxIter;
        return rep;
    }

    Assembly ph1 = assemble(program, true, options.box, options.margin_scale * std::max(1e-6, constant_scale(program)));
    SdpResult r1 = run_ipm(ph1.data, options.max_iter);
    if (r1.failed && !r1.converged && program.max_violation(r1.y.head(n)) > options.feas_tol)
        fail(ErrorKind::NumericalFailure, "interior point iterates lost definiteness");
    rep.iterations = r1.iterations;
    finish(r1.y);
    if (rep.residual <= options.feas_tol) {
        rep.status = Status::Feasible;
    } else {
        rep.status = r1.converged ? Status::Infeasible : Status::MaxIter;
    }
    return rep;
}

}  // namespace iqcloc::conic
