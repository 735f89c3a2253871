#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>

namespace uot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A plan entry (i,j) together with its flat position under the row-major
/// convention t[i*m + j] = T(i,j).
struct FlatIndex {
    Index i = 0;
    Index j = 0;
    Index flat = 0;

    friend bool operator==(const FlatIndex& p, const FlatIndex& q) {
        return p.flat == q.flat;
    }
};

inline FlatIndex make_flat_index(Index i, Index j, Index m) {
    return FlatIndex{i, j, i * m + j};
}

inline FlatIndex from_flat(Index flat, Index m) {
    return FlatIndex{flat / m, flat % m, flat};
}

/// Regularization strength, possibly the symbolic value +infinity.
/// Infinite queries are resolved on a path's terminal segment and never
/// fed into floating-point arithmetic.
struct Lambda {
    double value = 0.0;
    bool infinite = false;

    static Lambda finite(double v) { return Lambda{v, false}; }
    static Lambda infinity() { return Lambda{0.0, true}; }
};

/// Row-major vectorization: v[i*m + j] = M(i,j).
Vector vec_rowmajor(const Matrix& M);

/// Inverse of vec_rowmajor for an n-by-m matrix.
Matrix mat_from_vec(const Vector& t, Index n, Index m);

void validate_histogram(const Vector& w, const char* name);
void validate_cost_matrix(const Matrix& C);
void validate_plan(const Matrix& T);

/// The structured design operator H = [H_r; H_c] mapping a vectorized plan
/// to its stacked row and column sums. Never materialized; all actions are
/// O(n*m) loops over the plan.
struct DesignOperator {
    Index n = 0;
    Index m = 0;

    DesignOperator(Index rows, Index cols) : n(rows), m(cols) {
        if (n < 1 || m < 1) throw std::invalid_argument("DesignOperator: sizes must be >= 1");
    }
};

/// H t as [T 1_m; T^T 1_n], length n+m.
Vector apply_design(const DesignOperator& H, const Matrix& plan);
Vector apply_design_vec(const DesignOperator& H, const Vector& t);

/// H^T s with s = [s_a; s_b]: entry (i,j) of the result is s_a[i] + s_b[j].
Vector apply_design_adjoint(const DesignOperator& H, const Vector& s);

/// H^T H t: entry (i,j) is (row sum i of T) + (column sum j of T).
Vector gram_apply(const DesignOperator& H, const Vector& t);

}  // namespace uot
