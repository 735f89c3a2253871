#pragma once

#include "uot/types.hpp"

namespace uot {

/// Bregman divergence generator: KL uses phi(y) = y log y - y, QuadraticL2
/// uses phi(y) = y^2 / 2 (so that D_phi(u,v) = ||u-v||^2 / 2).
enum class DivergenceKind { KL, QuadraticL2 };

/// Exponent alpha in the absorption identity lambda*D(x,y) = D(lambda^a x, lambda^a y).
inline double homogeneity_exponent(DivergenceKind kind) {
    return kind == DivergenceKind::KL ? 1.0 : 0.5;
}

/// D_phi(u, v), with the convention 0*log(0) = 0 for KL.
double bregman(DivergenceKind kind, const Vector& u, const Vector& v);

/// Penalty weights of the general regularized problem. lambda_reg = 0
/// recovers the plain marginal-penalized problem.
struct PenaltyWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
    double lambda_reg = 0.0;
};

/// The regression-form objective F_lambda(t) = (1/lambda) <c,t> + D_phi(H t, [a;b]).
double objective(DivergenceKind kind, double lambda, const Matrix& plan, const Matrix& C,
                 const Vector& a, const Vector& b);

/// <C,T> + l1*D(T1,a) + l2*D(T'1,b) + lreg*D(vec T, vec a b').
/// Equals lambda * objective(...) when l1 = l2 = lambda and lreg = 0.
double objective_regularized(DivergenceKind kind, const PenaltyWeights& w, const Matrix& plan,
                             const Matrix& C, const Vector& a, const Vector& b);

}  // namespace uot
