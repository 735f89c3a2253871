#pragma once

#include "uot/types.hpp"

namespace uot {

/// Residual bundle certifying (approximate) optimality of a candidate plan.
/// All entries are >= 0; dual_feasibility is the magnitude of the most
/// negative multiplier on the inactive set (0 if none is negative).
struct KktResidual {
    double stationarity_active = 0.0;
    double dual_feasibility = 0.0;
    double complementarity = 0.0;
    double primal_feasibility = 0.0;

    double max() const;
    bool pass(double tol) const { return max() <= tol; }
};

enum class ProblemKind { Full, SemiRelaxed };

/// Explicit (n+m) x (n*m) 0/1 design matrix, for cross-checking the
/// matrix-free operator at test scale only (n*m <= 10000).
Matrix dense_design(Index n, Index m);

struct PgResult {
    Matrix plan;
    int iterations = 0;
    bool converged = false;
};

/// Reference solver for the fixed-lambda quadratic problem
///   min_{t>=0} (1/lambda) c't + 0.5 ||H t - y||^2
/// by projected gradient with the constant step 1/(n+m). Slow on purpose;
/// shares no code with the multiplicative or path solvers.
PgResult projected_gradient_l2(const Matrix& C, const Vector& a, const Vector& b, double lambda,
                               double tol = 1e-10, int max_iters = 2000000);

/// Reference solver for the semi-relaxed problem (exact column marginals):
///   min (1/lambda) c't + 0.5 ||H_r t - a||^2  s.t.  t >= 0, column j sums to b_j.
/// Projected gradient with a per-column scaled-simplex projection.
PgResult projected_gradient_semirelaxed(const Matrix& C, const Vector& a, const Vector& b,
                                        double lambda, double tol = 1e-10,
                                        int max_iters = 2000000);

struct LpSolution {
    double cost = 0.0;
    Matrix plan;
};

/// Exact balanced OT optimum by enumerating spanning-tree bases of the
/// n x m transportation graph. Requires ||a||_1 = ||b||_1 and n*m <= 16.
LpSolution balanced_ot_bruteforce(const Matrix& C, const Vector& a, const Vector& b);

/// KKT residuals of a candidate plan for the quadratic problem at the given
/// lambda. The active set is the strict support of t. For the semi-relaxed
/// kind, the equality multipliers u are least-squares fitted per column and
/// primal_feasibility reports ||H_c t - b||_inf.
KktResidual kkt_check(ProblemKind kind, const Matrix& plan, double lambda, const Matrix& C,
                      const Vector& a, const Vector& b);

}  // namespace uot
