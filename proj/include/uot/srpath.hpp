#pragma once

#include "uot/regpath.hpp"

namespace uot {

/// Starting plan at lambda = 0: column j carries its whole mass b_j on the
/// cheapest row, T0(i*, j) = b_j with i* = argmin_i C(i,j) (smallest i on
/// ties).
Matrix sr_initial_plan(const Matrix& C, const Vector& b);

/// Path of the semi-relaxed problem (exact column marginals, quadratically
/// penalized rows). Each step solves the saddle system
///   [[Hr'Hr|_A, Hc'|_A], [Hc|_A, 0]] [t_A; u] = beta - (1/lambda) gamma,
/// incrementally via the Schur complement; segments are affine in 1/lambda
/// for both plan and multipliers. Requires b > 0 componentwise.
RegularizationPath compute_sr_path(const Matrix& C, const Vector& a, const Vector& b,
                                   const PathOptions& options = {});

/// As eval_path_at; column sums equal b at every lambda. Below the first
/// breakpoint this is the initial plan (the path starts at lambda = 0).
Matrix eval_sr_path_at(const RegularizationPath& path, Lambda lambda);

}  // namespace uot
