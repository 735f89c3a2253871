#include "uot/srpath.hpp"

#include "path_detail.hpp"

#include <Eigen/LU>

namespace uot {

using detail::above;

Matrix sr_initial_plan(const Matrix& C, const Vector& b) {
    validate_cost_matrix(C);
    validate_histogram(b, "b");
    if (b.size() != C.cols()) throw std::invalid_argument("sr_initial_plan: size mismatch");
    Matrix T = Matrix::Zero(C.rows(), C.cols());
    for (Index j = 0; j < C.cols(); ++j) {
        Index best = 0;
        for (Index i = 1; i < C.rows(); ++i)
            if (C(i, j) < C(best, j)) best = i;  // smallest row index on ties
        T(best, j) = b[j];
    }
    return T;
}

namespace {

// Saddle system over the active set: plan entries first, then the m column
// multipliers. K = [[Hr'Hr|_A, Hc'|_A], [Hc|_A, 0]].
struct SrState {
    std::vector<FlatIndex> active;
    Index m = 0;
    Matrix Kinv;
    int updates_since_refresh = 0;
    PathOptions opts;

    Index dim() const { return Index(active.size()) + m; }

    Matrix build_K() const {
        const Index sz = dim(), na = Index(active.size());
        Matrix K = Matrix::Zero(sz, sz);
        for (Index p = 0; p < na; ++p)
            for (Index q = 0; q < na; ++q)
                K(p, q) = double(active[size_t(p)].i == active[size_t(q)].i);
        for (Index p = 0; p < na; ++p) {
            K(p, na + active[size_t(p)].j) = 1.0;
            K(na + active[size_t(p)].j, p) = 1.0;
        }
        return K;
    }

    void refactorize() {
        Eigen::FullPivLU<Matrix> lu(build_K());
        if (!lu.isInvertible())
            throw std::runtime_error("compute_sr_path: singular KKT system after re-factorization");
        Kinv = lu.inverse();
        updates_since_refresh = 0;
    }

    void refresh_if_stale() {
        if (updates_since_refresh >= opts.refresh_interval) refactorize();
    }

    void add(const FlatIndex& q) {
        const Index na = Index(active.size());
        Vector k(dim());
        for (Index p = 0; p < na; ++p) k[p] = double(active[size_t(p)].i == q.i);
        for (Index j = 0; j < m; ++j) k[na + j] = double(j == q.j);
        ++updates_since_refresh;
        if (auto ext = detail::extend_inverse(Kinv, k, 1.0, opts.singular_tol)) {
            // New entry belongs at the end of the plan block, before the
            // multipliers.
            Kinv = detail::move_last_to(*ext, na);
            active.push_back(q);
        } else {
            active.push_back(q);
            refactorize();
        }
        refresh_if_stale();
    }

    void remove_at(Index pos) {
        ++updates_since_refresh;
        if (auto sub = detail::downdate_inverse(Kinv, pos, opts.singular_tol)) {
            Kinv = std::move(*sub);
            active.erase(active.begin() + pos);
        } else {
            active.erase(active.begin() + pos);
            refactorize();
        }
        refresh_if_stale();
    }
};

std::vector<Index> flats_of(const std::vector<FlatIndex>& active) {
    std::vector<Index> flats;
    flats.reserve(active.size());
    for (const auto& q : active) flats.push_back(q.flat);
    return flats;
}

}  // namespace

RegularizationPath compute_sr_path(const Matrix& C, const Vector& a, const Vector& b,
                                   const PathOptions& options) {
    validate_cost_matrix(C);
    validate_histogram(a, "a");
    validate_histogram(b, "b");
    const Index n = C.rows(), m = C.cols();
    if (a.size() != n || b.size() != m) throw std::invalid_argument("compute_sr_path: size mismatch");
    if (b.minCoeff() <= 0.0)
        throw std::invalid_argument("compute_sr_path: b must be strictly positive");

    RegularizationPath path;
    path.n = n;
    path.m = m;
    path.semi_relaxed = true;

    SrState st;
    st.m = m;
    st.opts = options;
    const Matrix T0 = sr_initial_plan(C, b);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i)
            if (T0(i, j) > 0.0) st.active.push_back(make_flat_index(i, j, m));
    st.refactorize();

    auto coefficients = [&](PathSegment& seg) {
        const Index na = Index(st.active.size());
        seg.active.members = st.active;
        Vector beta(st.dim()), gamma(st.dim());
        for (Index p = 0; p < na; ++p) {
            beta[p] = a[st.active[size_t(p)].i];
            gamma[p] = C(st.active[size_t(p)].i, st.active[size_t(p)].j);
        }
        beta.tail(m) = b;
        gamma.tail(m).setZero();
        const Vector mt = st.Kinv * beta;
        const Vector ct = st.Kinv * gamma;
        seg.m_tilde = mt.head(na);
        seg.c_tilde = ct.head(na);
        seg.mult_m = mt.tail(m);
        seg.mult_c = ct.tail(m);
    };

    auto next_addition = [&](const PathSegment& seg) -> std::optional<AdditionEvent> {
        // Row-accumulated plan coefficients: [Hr'Hr x]_(i,j) = sum of x over
        // the active entries of row i.
        Vector rm = Vector::Zero(n), rc = Vector::Zero(n);
        for (Index p = 0; p < seg.active.size(); ++p) {
            rm[seg.active.members[size_t(p)].i] += seg.m_tilde[p];
            rc[seg.active.members[size_t(p)].i] += seg.c_tilde[p];
        }
        std::vector<char> in_active(size_t(n * m), 0);
        for (const auto& q : seg.active.members) in_active[size_t(q.flat)] = 1;
        auto ratio_at = [&](Index i, Index j) {
            const double num = C(i, j) - (rc[i] + seg.mult_c[j]);
            const double den = a[i] - (rm[i] + seg.mult_m[j]);
            // Same relative floor as the full path: exact-zero denominators
            // reappear as cancellation noise once the rows are matched.
            if (den <= 1e-10 * (std::abs(a[i]) + std::abs(rm[i] + seg.mult_m[j])))
                return std::numeric_limits<double>::quiet_NaN();
            return num / den;
        };
        double best = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < m; ++j) {
                if (in_active[size_t(i * m + j)]) continue;
                const double r = ratio_at(i, j);
                if (!std::isnan(r) && above(r, seg.lambda_lo)) best = std::min(best, r);
            }
        if (!std::isfinite(best)) return std::nullopt;
        AdditionEvent ev;
        ev.lambda = best;
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < m; ++j) {
                if (in_active[size_t(i * m + j)]) continue;
                const double r = ratio_at(i, j);
                if (!std::isnan(r) && above(r, seg.lambda_lo) && r <= best * (1.0 + 1e-12))
                    ev.entries.push_back(make_flat_index(i, j, m));
            }
        return ev;
    };

    detail::CycleGuard guard;
    double lambda_k = 0.0;
    guard.check(lambda_k, flats_of(st.active));

    while (true) {
        PathSegment seg;
        seg.lambda_lo = lambda_k;
        coefficients(seg);

        const auto rem = next_removal_lambda(seg);
        const auto add = next_addition(seg);
        if (!rem && !add) {
            path.segments.push_back(std::move(seg));
            break;
        }
        double lambda_next = std::numeric_limits<double>::infinity();
        if (rem) lambda_next = std::min(lambda_next, rem->lambda);
        if (add) lambda_next = std::min(lambda_next, add->lambda);

        seg.lambda_hi = lambda_next;
        path.segments.push_back(seg);
        if (Index(path.segments.size()) >= options.max_segments) {
            path.complete = false;
            break;
        }

        const double tie = lambda_next * (1.0 + options.tie_rel_tol);
        if (rem && rem->lambda <= tie) {
            std::vector<Index> pos = rem->positions;
            std::sort(pos.rbegin(), pos.rend());
            for (Index p : pos) {
                const Index col = st.active[size_t(p)].j;
                Index col_count = 0;
                for (const auto& q : st.active) col_count += Index(q.j == col);
                if (col_count <= 1)
                    throw std::runtime_error(
                        "compute_sr_path: structured degeneracy, column " + std::to_string(col) +
                        " would lose all active entries");
                st.remove_at(p);
            }
        }
        if (add && add->lambda <= tie) {
            for (const auto& q : add->entries) st.add(q);
        }
        guard.check(lambda_next, flats_of(st.active));
        lambda_k = lambda_next;
    }

    if (path.complete && !path.segments.empty()) {
        const auto& last = path.segments.back();
        Vector rows = Vector::Zero(n);
        for (Index p = 0; p < last.active.size(); ++p)
            rows[last.active.members[size_t(p)].i] += last.m_tilde[p];
        path.terminal_balanced = (rows - a).squaredNorm() <= 1e-12 * a.squaredNorm();
    }
    return path;
}

Matrix eval_sr_path_at(const RegularizationPath& path, Lambda lambda) {
    if (!path.semi_relaxed)
        throw std::invalid_argument("eval_sr_path_at: full path, use eval_path_at");
    if (!lambda.infinite && !(lambda.value > 0.0))
        throw std::domain_error("eval_sr_path_at: lambda must be > 0");
    if (path.segments.empty()) return Matrix::Zero(path.n, path.m);

    size_t lo = 0;
    if (lambda.infinite) {
        lo = path.segments.size() - 1;
    } else {
        size_t hi = path.segments.size();
        while (hi - lo > 1) {
            const size_t mid = (lo + hi) / 2;
            if (path.segments[mid].lambda_lo <= lambda.value) lo = mid;
            else hi = mid;
        }
    }
    return eval_segment(path, lo, lambda);
}

}  // namespace uot
