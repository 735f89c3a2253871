#include "uot/divergence.hpp"

#include <cmath>

namespace uot {

namespace {

double kl_divergence(const Vector& u, const Vector& v) {
    double acc = 0.0;
    for (Index i = 0; i < u.size(); ++i) {
        const double ui = u[i], vi = v[i];
        if (std::isnan(ui) || std::isnan(vi)) throw std::domain_error("bregman: NaN input");
        if (ui < 0.0) throw std::domain_error("bregman: KL needs u >= 0");
        if (vi <= 0.0) throw std::domain_error("bregman: KL needs v > 0");
        if (ui > 0.0) acc += ui * std::log(ui / vi) - ui + vi;
        else acc += vi;  // 0*log(0) = 0
    }
    return acc;
}

}  // namespace

double bregman(DivergenceKind kind, const Vector& u, const Vector& v) {
    if (u.size() != v.size()) throw std::invalid_argument("bregman: size mismatch");
    if (kind == DivergenceKind::KL) return kl_divergence(u, v);
    if (u.hasNaN() || v.hasNaN()) throw std::domain_error("bregman: NaN input");
    return 0.5 * (u - v).squaredNorm();
}

double objective(DivergenceKind kind, double lambda, const Matrix& plan, const Matrix& C,
                 const Vector& a, const Vector& b) {
    if (lambda <= 0.0) throw std::invalid_argument("objective: lambda must be > 0");
    if (plan.rows() != C.rows() || plan.cols() != C.cols())
        throw std::invalid_argument("objective: plan/cost shape mismatch");
    DesignOperator H(plan.rows(), plan.cols());
    Vector y(a.size() + b.size());
    y << a, b;
    const double linear = (C.array() * plan.array()).sum();
    return linear / lambda + bregman(kind, apply_design(H, plan), y);
}

double objective_regularized(DivergenceKind kind, const PenaltyWeights& w, const Matrix& plan,
                             const Matrix& C, const Vector& a, const Vector& b) {
    if (w.lambda1 <= 0.0 || w.lambda2 <= 0.0 || w.lambda_reg < 0.0)
        throw std::invalid_argument("objective_regularized: invalid weights");
    double val = (C.array() * plan.array()).sum();
    val += w.lambda1 * bregman(kind, plan.rowwise().sum(), a);
    val += w.lambda2 * bregman(kind, plan.colwise().sum().transpose(), b);
    if (w.lambda_reg > 0.0) {
        Matrix ref = a * b.transpose();
        val += w.lambda_reg * bregman(kind, vec_rowmajor(plan), vec_rowmajor(ref));
    }
    return val;
}

}  // namespace uot
