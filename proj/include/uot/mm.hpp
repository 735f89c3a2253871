#pragma once

#include "uot/divergence.hpp"
#include "uot/types.hpp"

#include <vector>

namespace uot {

enum class MmInit { OuterProduct, Uniform };

struct MmConfig {
    int max_iters = 100000;
    double rel_tol = 1e-10;  // relative objective decrease over one iteration
    MmInit init = MmInit::OuterProduct;
    bool record_trace = false;
};

struct SolveReport {
    Matrix plan;
    int iterations = 0;
    std::vector<double> objective_trace;  // filled only when record_trace
    double final_objective = 0.0;
    double marginal_error_rows = 0.0;  // ||T1 - a||_inf
    double marginal_error_cols = 0.0;  // ||T'1 - b||_inf
    bool converged = false;
};

enum class MmMethod { Kl, L2, L2Alt };

/// Default starting plan: T0_ij = a_i b_j / ||b||_1 (strictly positive
/// wherever a_i, b_j > 0). Multiplicative updates never revive zeros, so
/// rows with a_i = 0 stay identically zero from here on.
Matrix mm_initial_plan(const Vector& a, const Vector& b, MmInit init);

/// One KL update: diag(a/T1)^(1/2) (T .* exp(-C/(2 lambda))) diag(b/T'1)^(1/2).
Matrix mm_kl_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                  double lambda);

/// One thresholded quadratic update:
///   T'_ij = T_ij * max(0, a_i + b_j - C_ij/lambda) / (rowsum_i + colsum_j).
/// Entries with a_i + b_j - C_ij/lambda < 0 become exactly zero and stay zero.
Matrix mm_l2_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                  double lambda);

/// Threshold-free quadratic update (linear term majorized quadratically):
///   T'_ij = T_ij * (a_i + b_j) / (rowsum_i + colsum_j + C_ij/lambda).
/// Never creates zeros; its positive fixed points satisfy the same
/// stationarity condition as mm_l2_step.
Matrix mm_l2_alt_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                      double lambda);

/// One update of the entropy-regularized KL-penalized problem:
///   T' = diag(a/T1)^(l1/L) (T^((l1+l2)/L) .* K) diag(b/T'1)^(l2/L),
///   K  = (a b')^(lreg/L) .* exp(-C/L),  L = l1 + l2 + lreg.
/// Weights (l, l, 0) reduce this to mm_kl_step with the same l.
Matrix mm_ruot_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                    const PenaltyWeights& w);

/// Iterates the selected update until the relative objective decrease falls
/// below rel_tol or max_iters is hit (reported via converged, not an error).
SolveReport solve_mm(MmMethod method, const Matrix& C, const Vector& a, const Vector& b,
                     double lambda, const MmConfig& config = {});

SolveReport solve_mm_ruot(const Matrix& C, const Vector& a, const Vector& b,
                          const PenaltyWeights& w, const MmConfig& config = {});

/// Inexact proximal-point scheme for balanced OT: outer kernel
/// exp(-C/lambda) .* T with inner Sinkhorn scalings (default one pass).
/// Requires ||a||_1 = ||b||_1 and a, b > 0.
Matrix ipot_solve(const Matrix& C, const Vector& a, const Vector& b, double lambda,
                  int outer_iters, int inner_sinkhorn_iters = 1);

}  // namespace uot
