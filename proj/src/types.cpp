#include "uot/types.hpp"

#include <cmath>
#include <string>

namespace uot {

Vector vec_rowmajor(const Matrix& M) {
    Vector v(M.size());
    // Column-major view of the transpose is exactly the row-major order of M.
    Eigen::Map<Matrix>(v.data(), M.cols(), M.rows()) = M.transpose();
    return v;
}

Matrix mat_from_vec(const Vector& t, Index n, Index m) {
    if (t.size() != n * m) throw std::invalid_argument("mat_from_vec: length must equal n*m");
    return Eigen::Map<const Matrix>(t.data(), m, n).transpose();
}

void validate_histogram(const Vector& w, const char* name) {
    if (w.size() < 1) throw std::invalid_argument(std::string(name) + ": empty histogram");
    for (Index i = 0; i < w.size(); ++i) {
        if (!std::isfinite(w[i]))
            throw std::invalid_argument(std::string(name) + "[" + std::to_string(i) + "] is not finite");
        if (w[i] < 0.0)
            throw std::invalid_argument(std::string(name) + "[" + std::to_string(i) + "] is negative");
    }
    if (w.maxCoeff() <= 0.0) throw std::invalid_argument(std::string(name) + ": all weights are zero");
}

void validate_cost_matrix(const Matrix& C) {
    if (C.rows() < 1 || C.cols() < 1) throw std::invalid_argument("C: empty cost matrix");
    for (Index i = 0; i < C.rows(); ++i)
        for (Index j = 0; j < C.cols(); ++j) {
            if (!std::isfinite(C(i, j)))
                throw std::invalid_argument("C[" + std::to_string(i) + "," + std::to_string(j) +
                                            "] is not finite");
            if (C(i, j) < 0.0)
                throw std::invalid_argument("C[" + std::to_string(i) + "," + std::to_string(j) +
                                            "] is negative");
        }
}

void validate_plan(const Matrix& T) {
    for (Index i = 0; i < T.rows(); ++i)
        for (Index j = 0; j < T.cols(); ++j) {
            if (!std::isfinite(T(i, j)) || T(i, j) < 0.0)
                throw std::invalid_argument("T[" + std::to_string(i) + "," + std::to_string(j) +
                                            "] is negative or not finite");
        }
}

Vector apply_design(const DesignOperator& H, const Matrix& plan) {
    if (plan.rows() != H.n || plan.cols() != H.m)
        throw std::invalid_argument("apply_design: plan shape does not match operator");
    Vector s(H.n + H.m);
    s.head(H.n) = plan.rowwise().sum();
    s.tail(H.m) = plan.colwise().sum().transpose();
    return s;
}

Vector apply_design_vec(const DesignOperator& H, const Vector& t) {
    if (t.size() != H.n * H.m)
        throw std::invalid_argument("apply_design_vec: length must be n*m");
    return apply_design(H, mat_from_vec(t, H.n, H.m));
}

Vector apply_design_adjoint(const DesignOperator& H, const Vector& s) {
    if (s.size() != H.n + H.m)
        throw std::invalid_argument("apply_design_adjoint: length must be n+m");
    Vector out(H.n * H.m);
    for (Index i = 0; i < H.n; ++i)
        for (Index j = 0; j < H.m; ++j) out[i * H.m + j] = s[i] + s[H.n + j];
    return out;
}

Vector gram_apply(const DesignOperator& H, const Vector& t) {
    if (t.size() != H.n * H.m) throw std::invalid_argument("gram_apply: length must be n*m");
    return apply_design_adjoint(H, apply_design_vec(H, t));
}

}  // namespace uot
