#pragma once

// LMI programs over real scalar and symmetric-matrix decision variables, and
// the primal-dual interior-point method that solves them.
//
// A program is a list of affine symmetric matrix expressions F_k(y), each
// required to satisfy F_k(y) <= 0 (negative semidefinite), plus an optional
// affine scalar objective c^T y + c0 to minimize. Feasibility-only programs are
// solved as the margin program  min t  s.t.  F_k(y) <= t I,  which returns the
// most interior point available inside a bounded box.

#include "iqcloc/matrixcore.hpp"

#include <concepts>
#include <optional>
#include <string>
#include <vector>

namespace iqcloc::conic {

// Matrix-valued affine function of the program's scalar variables:
//   constant + sum_i y_i * coef_i
class Affine {
public:
    struct Term {
        int var;
        Mat coef;
    };

    Affine() = default;
    Affine(Mat constant);  // NOLINT(google-explicit-constructor): constants mix freely with expressions
    static Affine zeros(Eigen::Index rows, Eigen::Index cols);
    static Affine variable(int var, Mat coef);

    Eigen::Index rows() const { return constant_.rows(); }
    Eigen::Index cols() const { return constant_.cols(); }
    const Mat& constant() const { return constant_; }
    const std::vector<Term>& terms() const { return terms_; }
    bool is_constant() const { return terms_.empty(); }

    Affine transpose() const;
    Affine block(Eigen::Index r0, Eigen::Index c0, Eigen::Index nr, Eigen::Index nc) const;
    // Column-major vectorization, (rows*cols) x 1.
    Affine vec() const;
    Mat value(const Vec& y) const;

    Affine& operator+=(const Affine& rhs);
    Affine& operator-=(const Affine& rhs);
    Affine& operator*=(double s);

    friend Affine operator+(Affine a, const Affine& b) { return a += b; }
    friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
    friend Affine operator-(Affine a) { return a *= -1.0; }
    template <std::floating_point S>
    friend Affine operator*(S s, Affine a) {
        return a *= static_cast<double>(s);
    }
    template <std::floating_point S>
    friend Affine operator*(Affine a, S s) {
        return a *= static_cast<double>(s);
    }
    // Hidden friends: only found through ADL, so plain Mat * Mat never
    // considers them.
    friend Affine operator*(const Mat& m, const Affine& a) { return left_multiply(m, a); }
    friend Affine operator*(const Affine& a, const Mat& m) { return right_multiply(a, m); }

private:
    static Affine left_multiply(const Mat& m, const Affine& a);
    static Affine right_multiply(const Affine& a, const Mat& m);
    void add_term(int var, const Mat& coef);

    Mat constant_;
    std::vector<Term> terms_;  // sorted by var, unique
};

// (a + a^T) / 2
Affine sym(const Affine& a);
Affine hstack(const std::vector<Affine>& parts);
Affine vstack(const std::vector<Affine>& parts);
Affine grid(const std::vector<std::vector<Affine>>& blocks);
Affine blkdiag(const std::vector<Affine>& blocks);
// scalar (1x1 expression) times a constant matrix
Affine scaled(const Affine& scalar, const Mat& m);
// Y^T S Y for constant Y.
Affine congruence(const Mat& outer, const Affine& middle);

enum class VarKind { Scalar, Symmetric, Matrix };

struct Variable {
    std::string name;
    VarKind kind;
    int rows;
    int cols;
    int offset;  // first scalar index
    int count;   // number of scalars
};

class Program {
public:
    Affine add_scalar(const std::string& name);
    Affine add_symmetric(const std::string& name, int dim);
    Affine add_matrix(const std::string& name, int rows, int cols);

    // expr <= 0 after symmetrization. Expressions with zero rows are ignored.
    void add_nsd(const Affine& expr, const std::string& label = {});
    // expr >= 0
    void add_psd(const Affine& expr, const std::string& label = {});
    // Returns a scalar s with ||expr||_F^2 <= s (Schur-complement epigraph).
    Affine add_frobenius_sq_bound(const Affine& expr, const std::string& name);

    void minimize(const Affine& objective);

    int num_scalars() const { return num_scalars_; }
    const std::vector<Variable>& variables() const { return variables_; }
    const Variable* find(const std::string& name) const;

    struct Constraint {
        Affine expr;
        std::string label;
    };
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::optional<Affine>& objective() const { return objective_; }

    // Largest eigenvalue over all constraints at y; <= 0 means feasible.
    double max_violation(const Vec& y) const;

private:
    int reserve(const std::string& name, VarKind kind, int rows, int cols, int count);

    int num_scalars_ = 0;
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    std::optional<Affine> objective_;
};

enum class Status { Optimal, Feasible, Infeasible, MaxIter };
std::string_view to_string(Status s);

struct SolveOptions {
    double feas_tol = 1e-7;
    double obj_tol = 1e-6;
    // Every scalar variable is confined to [-box, box]; an optimum on the box
    // boundary is reported as Unbounded.
    double box = 1e6;
    int max_iter = 120;
    // Lower bound on the margin variable of feasibility programs, relative to
    // the largest constant entry of the constraints.
    double margin_scale = 1.0;
};

struct SolveReport {
    Status status = Status::MaxIter;
    double objective_value = 0.0;
    double residual = 0.0;  // max(0, largest constraint eigenvalue)
    int iterations = 0;
    Vec y;

    bool ok() const { return status == Status::Optimal || status == Status::Feasible; }
    Mat value(const Affine& e) const { return e.value(y); }
    double scalar(const Affine& e) const { return e.value(y)(0, 0); }
};

// Throws Error{Unbounded} when the objective runs into the variable box and
// Error{NumericalFailure} on non-finite iterates.
SolveReport solve(const Program& program, const SolveOptions& options = {});

}  // namespace iqcloc::conic
