#include "uot/regpath.hpp"

#include "path_detail.hpp"

#include <Eigen/LU>

#include <algorithm>

namespace uot {

using detail::above;

bool ActiveSet::contains(Index flat) const {
    for (const auto& q : members)
        if (q.flat == flat) return true;
    return false;
}

Matrix dense_gram_matrix(const ActiveSet& active) {
    const Index sz = active.size();
    Matrix B(sz, sz);
    for (Index p = 0; p < sz; ++p)
        for (Index q = 0; q < sz; ++q)
            B(p, q) = double(active.members[size_t(p)].i == active.members[size_t(q)].i) +
                      double(active.members[size_t(p)].j == active.members[size_t(q)].j);
    return B;
}

namespace {

Matrix invert_gram(const ActiveSet& active) {
    const Matrix B = dense_gram_matrix(active);
    Eigen::FullPivLU<Matrix> lu(B);
    if (!lu.isInvertible()) throw std::runtime_error("regpath: singular Gram after re-factorization");
    return lu.inverse();
}

Vector gram_column(const ActiveSet& active, const FlatIndex& q) {
    Vector k(active.size());
    for (Index p = 0; p < active.size(); ++p)
        k[p] = double(active.members[size_t(p)].i == q.i) +
               double(active.members[size_t(p)].j == q.j);
    return k;
}

}  // namespace

std::pair<double, std::vector<FlatIndex>> initial_breakpoint(const Matrix& C, const Vector& a,
                                                             const Vector& b) {
    validate_cost_matrix(C);
    validate_histogram(a, "a");
    validate_histogram(b, "b");
    const Index n = C.rows(), m = C.cols();
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) {
            const double mass = a[i] + b[j];
            if (mass > 0.0) best = std::min(best, C(i, j) / mass);
        }
    if (!std::isfinite(best)) throw std::invalid_argument("initial_breakpoint: H'y is identically zero");
    std::vector<FlatIndex> active;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) {
            const double mass = a[i] + b[j];
            if (mass > 0.0 && C(i, j) / mass <= best * (1.0 + 1e-12) + 0.0)
                active.push_back(make_flat_index(i, j, m));
        }
    return {best, active};
}

std::optional<RemovalEvent> next_removal_lambda(const PathSegment& seg) {
    double best = std::numeric_limits<double>::infinity();
    for (Index p = 0; p < seg.active.size(); ++p) {
        if (seg.m_tilde[p] == 0.0) continue;
        const double ratio = seg.c_tilde[p] / seg.m_tilde[p];
        if (above(ratio, seg.lambda_lo)) best = std::min(best, ratio);
    }
    if (!std::isfinite(best)) return std::nullopt;
    RemovalEvent ev;
    ev.lambda = best;
    for (Index p = 0; p < seg.active.size(); ++p) {
        if (seg.m_tilde[p] == 0.0) continue;
        const double ratio = seg.c_tilde[p] / seg.m_tilde[p];
        if (above(ratio, seg.lambda_lo) && ratio <= best * (1.0 + 1e-12)) ev.positions.push_back(p);
    }
    return ev;
}

std::optional<AdditionEvent> next_addition_lambda(const PathSegment& seg, const Matrix& C,
                                                  const Vector& a, const Vector& b) {
    const Index n = C.rows(), m = C.cols();
    DesignOperator H(n, m);
    Vector m_full = Vector::Zero(n * m), c_full = Vector::Zero(n * m);
    for (Index p = 0; p < seg.active.size(); ++p) {
        m_full[seg.active.members[size_t(p)].flat] = seg.m_tilde[p];
        c_full[seg.active.members[size_t(p)].flat] = seg.c_tilde[p];
    }
    const Vector gm = gram_apply(H, m_full);
    const Vector gc = gram_apply(H, c_full);
    std::vector<char> in_active(size_t(n * m), 0);
    for (const auto& q : seg.active.members) in_active[size_t(q.flat)] = 1;

    double best = std::numeric_limits<double>::infinity();
    auto ratio_at = [&](Index flat) {
        const Index i = flat / m, j = flat % m;
        const double num = C(i, j) - gc[flat];
        const double den = (a[i] + b[j]) - gm[flat];
        // Denominators that are zero in exact arithmetic (e.g. every entry
        // once the balanced solution is reached) show up as cancellation
        // noise; a relative floor keeps them excluded.
        if (den <= 1e-10 * (std::abs(a[i] + b[j]) + std::abs(gm[flat])))
            return std::numeric_limits<double>::quiet_NaN();
        return num / den;
    };
    for (Index flat = 0; flat < n * m; ++flat) {
        if (in_active[size_t(flat)]) continue;
        const double r = ratio_at(flat);
        if (!std::isnan(r) && above(r, seg.lambda_lo)) best = std::min(best, r);
    }
    if (!std::isfinite(best)) return std::nullopt;
    AdditionEvent ev;
    ev.lambda = best;
    for (Index flat = 0; flat < n * m; ++flat) {
        if (in_active[size_t(flat)]) continue;
        const double r = ratio_at(flat);
        if (!std::isnan(r) && above(r, seg.lambda_lo) && r <= best * (1.0 + 1e-12))
            ev.entries.push_back(from_flat(flat, m));
    }
    return ev;
}

GramInverseCache schur_add(const GramInverseCache& cache, const FlatIndex& new_index,
                           const ActiveSet& active, double singular_tol) {
    if (active.contains(new_index.flat))
        throw std::invalid_argument("schur_add: index already active");
    GramInverseCache out;
    out.updates_since_refresh = cache.updates_since_refresh + 1;
    const Vector k = gram_column(active, new_index);
    if (auto ext = detail::extend_inverse(cache.inverse, k, 2.0, singular_tol)) {
        out.inverse = std::move(*ext);
        return out;
    }
    ActiveSet grown = active;
    grown.members.push_back(new_index);
    out.inverse = invert_gram(grown);
    out.updates_since_refresh = 0;
    return out;
}

GramInverseCache schur_remove(const GramInverseCache& cache, const FlatIndex& index,
                              const ActiveSet& active, double singular_tol) {
    Index pos = -1;
    for (Index p = 0; p < active.size(); ++p)
        if (active.members[size_t(p)].flat == index.flat) pos = p;
    if (pos < 0) throw std::invalid_argument("schur_remove: index not active");
    GramInverseCache out;
    out.updates_since_refresh = cache.updates_since_refresh + 1;
    if (auto sub = detail::downdate_inverse(cache.inverse, pos, singular_tol)) {
        out.inverse = std::move(*sub);
        return out;
    }
    ActiveSet shrunk = active;
    shrunk.members.erase(shrunk.members.begin() + pos);
    out.inverse = invert_gram(shrunk);
    out.updates_since_refresh = 0;
    return out;
}

namespace {

struct PathState {
    ActiveSet active;
    GramInverseCache cache;
    PathOptions opts;

    void refresh_if_stale() {
        if (cache.updates_since_refresh >= opts.refresh_interval && active.size() > 0) {
            cache.inverse = invert_gram(active);
            cache.updates_since_refresh = 0;
        }
    }
    void add(const FlatIndex& q) {
        cache = schur_add(cache, q, active, opts.singular_tol);
        active.members.push_back(q);
        refresh_if_stale();
    }
    void remove_at(Index pos) {
        cache = schur_remove(cache, active.members[size_t(pos)], active, opts.singular_tol);
        active.members.erase(active.members.begin() + pos);
        refresh_if_stale();
    }
};

std::vector<Index> flats_of(const ActiveSet& active) {
    std::vector<Index> flats;
    flats.reserve(active.members.size());
    for (const auto& q : active.members) flats.push_back(q.flat);
    return flats;
}

}  // namespace

RegularizationPath compute_path(const Matrix& C, const Vector& a, const Vector& b,
                                const PathOptions& options) {
    const Index n = C.rows(), m = C.cols();
    auto [lambda1, initial] = initial_breakpoint(C, a, b);

    RegularizationPath path;
    path.n = n;
    path.m = m;

    PathState st;
    st.opts = options;
    for (const auto& q : initial) st.add(q);

    const DesignOperator H(n, m);
    Vector y(n + m);
    y << a, b;
    const double y2 = y.squaredNorm();

    auto gather = [&](auto&& get) {
        Vector v(st.active.size());
        for (Index p = 0; p < st.active.size(); ++p) v[p] = get(st.active.members[size_t(p)]);
        return v;
    };
    auto coefficients = [&](PathSegment& seg) {
        seg.active = st.active;
        const Vector mA = gather([&](const FlatIndex& q) { return a[q.i] + b[q.j]; });
        const Vector cA = gather([&](const FlatIndex& q) { return C(q.i, q.j); });
        seg.m_tilde = st.cache.inverse * mA;
        seg.c_tilde = st.cache.inverse * cA;
    };

    detail::CycleGuard guard;
    double lambda_k = lambda1;
    guard.check(lambda_k, flats_of(st.active));

    while (true) {
        PathSegment seg;
        seg.lambda_lo = lambda_k;
        coefficients(seg);

        const auto rem = next_removal_lambda(seg);
        const auto add = next_addition_lambda(seg, C, a, b);
        if (!rem && !add) {
            path.segments.push_back(std::move(seg));  // lambda_hi stays +inf
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
            // Removal first when removal and addition coincide.
            std::vector<Index> pos = rem->positions;
            std::sort(pos.rbegin(), pos.rend());
            for (Index p : pos) st.remove_at(p);
        }
        if (add && add->lambda <= tie) {
            for (const auto& q : add->entries) st.add(q);
        }
        guard.check(lambda_next, flats_of(st.active));
        lambda_k = lambda_next;
    }

    if (path.complete && !path.segments.empty()) {
        const auto& last = path.segments.back();
        Vector t_inf = Vector::Zero(n * m);
        for (Index p = 0; p < last.active.size(); ++p)
            t_inf[last.active.members[size_t(p)].flat] = last.m_tilde[p];
        path.terminal_balanced = (apply_design_vec(H, t_inf) - y).squaredNorm() <= 1e-12 * y2;
    }
    return path;
}

namespace {

Matrix scatter_segment(const PathSegment& seg, Index n, Index m, Lambda lambda) {
    Matrix T = Matrix::Zero(n, m);
    for (Index p = 0; p < seg.active.size(); ++p) {
        const auto& q = seg.active.members[size_t(p)];
        const double v = lambda.infinite ? seg.m_tilde[p]
                                         : seg.m_tilde[p] - seg.c_tilde[p] / lambda.value;
        T(q.i, q.j) = std::max(0.0, v);
    }
    return T;
}

}  // namespace

Matrix eval_segment(const RegularizationPath& path, size_t segment_index, Lambda lambda) {
    return scatter_segment(path.segments.at(segment_index), path.n, path.m, lambda);
}

Matrix eval_path_at(const RegularizationPath& path, Lambda lambda) {
    if (path.semi_relaxed)
        throw std::invalid_argument("eval_path_at: semi-relaxed path, use eval_sr_path_at");
    if (!lambda.infinite && !(lambda.value > 0.0))
        throw std::domain_error("eval_path_at: lambda must be > 0");
    if (path.segments.empty()) return Matrix::Zero(path.n, path.m);
    if (lambda.infinite) return scatter_segment(path.segments.back(), path.n, path.m, lambda);
    if (lambda.value < path.segments.front().lambda_lo) return Matrix::Zero(path.n, path.m);

    // Last segment whose lower breakpoint does not exceed lambda.
    size_t lo = 0, hi = path.segments.size();
    while (hi - lo > 1) {
        const size_t mid = (lo + hi) / 2;
        if (path.segments[mid].lambda_lo <= lambda.value) lo = mid;
        else hi = mid;
    }
    return scatter_segment(path.segments[lo], path.n, path.m, lambda);
}

}  // namespace uot
