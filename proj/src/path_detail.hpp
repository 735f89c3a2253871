#pragma once

#include "uot/types.hpp"

#include <algorithm>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace uot::detail {

// Strictly-greater-than guard for breakpoint candidates: values at the
// current breakpoint itself (up to relative noise) would create zero-length
// segments.
inline bool above(double candidate, double lambda_lo) {
    return candidate > lambda_lo * (1.0 + 1e-12) && candidate > 0.0 && std::isfinite(candidate);
}

// Exact-repeat detection of (lambda, active flats) pairs.
struct CycleGuard {
    std::unordered_set<std::string> seen;

    void check(double lambda, const std::vector<Index>& flats_unsorted) {
        std::string key(sizeof(double), '\0');
        std::memcpy(key.data(), &lambda, sizeof(double));
        std::vector<Index> flats = flats_unsorted;
        std::sort(flats.begin(), flats.end());
        for (Index f : flats) {
            char buf[sizeof(Index)];
            std::memcpy(buf, &f, sizeof(Index));
            key.append(buf, sizeof(Index));
        }
        if (!seen.insert(key).second)
            throw std::runtime_error("path: cycling detected at lambda = " + std::to_string(lambda));
    }
};

// Inverse of [[B, k],[k', diag]] given Binv = B^{-1}, with the new index
// appended last. Returns nothing when the Schur complement is smaller than
// singular_tol in magnitude.
inline std::optional<Matrix> extend_inverse(const Matrix& Binv, const Vector& k, double diag,
                                            double singular_tol) {
    const Index sz = Binv.rows();
    if (sz == 0) {
        if (std::abs(diag) < singular_tol) return std::nullopt;
        Matrix out(1, 1);
        out(0, 0) = 1.0 / diag;
        return out;
    }
    const Vector w = Binv * k;
    const double S = diag - k.dot(w);
    if (std::abs(S) < singular_tol) return std::nullopt;
    Matrix out(sz + 1, sz + 1);
    out.topLeftCorner(sz, sz) = Binv + (w * w.transpose()) / S;
    out.topRightCorner(sz, 1) = -w / S;
    out.bottomLeftCorner(1, sz) = -w.transpose() / S;
    out(sz, sz) = 1.0 / S;
    return out;
}

// Inverse of B with row/column `pos` deleted, from Binv = B^{-1}. Returns
// nothing when the pivot Binv(pos,pos) is smaller than singular_tol.
inline std::optional<Matrix> downdate_inverse(const Matrix& Binv, Index pos,
                                              double singular_tol) {
    const Index sz = Binv.rows();
    const double pivot = Binv(pos, pos);
    if (std::abs(pivot) < singular_tol) return std::nullopt;
    Matrix sub(sz - 1, sz - 1);
    Vector col(sz - 1), row(sz - 1);
    Index r = 0;
    for (Index p = 0; p < sz; ++p) {
        if (p == pos) continue;
        Index c = 0;
        for (Index q = 0; q < sz; ++q) {
            if (q == pos) continue;
            sub(r, c) = Binv(p, q);
            ++c;
        }
        col[r] = Binv(p, pos);
        row[r] = Binv(pos, p);
        ++r;
    }
    sub.noalias() -= (col * row.transpose()) / pivot;
    return sub;
}

// Moves the last row/column of a symmetric matrix to position `pos`,
// shifting the block in between (symmetric permutation of the inverse).
inline Matrix move_last_to(const Matrix& M, Index pos) {
    const Index sz = M.rows();
    std::vector<Index> perm(static_cast<size_t>(sz));
    for (Index p = 0; p < pos; ++p) perm[size_t(p)] = p;
    perm[size_t(pos)] = sz - 1;
    for (Index p = pos + 1; p < sz; ++p) perm[size_t(p)] = p - 1;
    Matrix out(sz, sz);
    for (Index p = 0; p < sz; ++p)
        for (Index q = 0; q < sz; ++q) out(p, q) = M(perm[size_t(p)], perm[size_t(q)]);
    return out;
}

}  // namespace uot::detail
