#pragma once

#include "uot/types.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace uot {

/// Ordered support of the plan; the order matches the rows/columns of the
/// cached Gram inverse.
struct ActiveSet {
    std::vector<FlatIndex> members;

    Index size() const { return Index(members.size()); }
    bool contains(Index flat) const;
};

/// Dense inverse of H_A' H_A, maintained incrementally. The Gram entry for
/// p=(i,j), q=(k,l) is [i==k] + [j==l], so the diagonal is 2.
struct GramInverseCache {
    Matrix inverse;  // |A| x |A|
    int updates_since_refresh = 0;
};

/// One affine piece of the path: t_A(lambda) = m_tilde - (1/lambda) c_tilde
/// on [lambda_lo, lambda_hi], entrywise non-negative there.
struct PathSegment {
    double lambda_lo = 0.0;
    double lambda_hi = std::numeric_limits<double>::infinity();
    ActiveSet active;
    Vector m_tilde;
    Vector c_tilde;
    // Semi-relaxed paths also carry the equality multipliers u(lambda) =
    // mult_m - (1/lambda) mult_c (length m); empty otherwise.
    Vector mult_m;
    Vector mult_c;

    bool unbounded() const { return std::isinf(lambda_hi); }
};

struct RegularizationPath {
    Index n = 0;
    Index m = 0;
    bool semi_relaxed = false;
    bool terminal_balanced = false;  // residual ||H t - y|| reached 0 at the end
    bool complete = true;            // false when stopped at max_segments
    std::vector<PathSegment> segments;
};

struct PathOptions {
    int max_segments = 50000;
    double singular_tol = 1e-10;
    int refresh_interval = 50;  // full re-factorization cadence
    double tie_rel_tol = 1e-12;
};

struct RemovalEvent {
    double lambda = 0.0;
    std::vector<Index> positions;  // positions within the active order, ties included
};

struct AdditionEvent {
    double lambda = 0.0;
    std::vector<FlatIndex> entries;  // ties included
};

/// First breakpoint lambda_1 = min over entries of c/m with m = vec(a 1' + 1 b'),
/// together with every argmin entry.
std::pair<double, std::vector<FlatIndex>> initial_breakpoint(const Matrix& C, const Vector& a,
                                                             const Vector& b);

/// Smallest entrywise ratio c_tilde/m_tilde strictly greater than lambda_lo,
/// i.e. the lambda at which an active coefficient hits zero.
std::optional<RemovalEvent> next_removal_lambda(const PathSegment& seg);

/// Smallest lambda > lambda_lo at which a non-active entry's multiplier
/// gamma = (1/lambda)(c - H'H c_tilde) - (m - H'H m_tilde) turns negative.
/// Entries with non-positive denominator never activate and are skipped.
std::optional<AdditionEvent> next_addition_lambda(const PathSegment& seg, const Matrix& C,
                                                  const Vector& a, const Vector& b);

/// Dense Gram H_A' H_A of an active set (small, for updates and checks).
Matrix dense_gram_matrix(const ActiveSet& active);

/// Extends the cached inverse by one entry via the Schur complement
/// S = 2 - b' B^{-1} b; falls back to a full re-factorization when |S| is
/// below singular_tol. `active` is the set before the addition.
GramInverseCache schur_add(const GramInverseCache& cache, const FlatIndex& new_index,
                           const ActiveSet& active, double singular_tol = 1e-10);

/// Removes one entry from the cached inverse (rank-one downdate); falls back
/// to a full re-factorization when the pivot is below singular_tol.
GramInverseCache schur_remove(const GramInverseCache& cache, const FlatIndex& index,
                              const ActiveSet& active, double singular_tol = 1e-10);

/// Full path of the quadratically penalized problem (Algorithm-style sweep
/// over breakpoints, Schur-updated Gram inverse, O(nm) work per step).
RegularizationPath compute_path(const Matrix& C, const Vector& a, const Vector& b,
                                const PathOptions& options = {});

/// Plan at the given lambda (binary search over breakpoints). Below the first
/// breakpoint the plan is zero; Lambda::infinity() returns the terminal
/// plan m_tilde, the balanced limit of the path.
Matrix eval_path_at(const RegularizationPath& path, Lambda lambda);

/// Evaluates one segment's affine formula regardless of its lambda range
/// (used for continuity and collinearity checks).
Matrix eval_segment(const RegularizationPath& path, size_t segment_index, Lambda lambda);

}  // namespace uot
