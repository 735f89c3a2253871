#include "uot/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace uot {

double KktResidual::max() const {
    return std::max(std::max(stationarity_active, dual_feasibility),
                    std::max(complementarity, primal_feasibility));
}

Matrix dense_design(Index n, Index m) {
    if (n * m > 10000) throw std::invalid_argument("dense_design: n*m exceeds the test-scale guard");
    Matrix H = Matrix::Zero(n + m, n * m);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) {
            H(i, i * m + j) = 1.0;
            H(n + j, i * m + j) = 1.0;
        }
    return H;
}

PgResult projected_gradient_l2(const Matrix& C, const Vector& a, const Vector& b, double lambda,
                               double tol, int max_iters) {
    if (lambda <= 0.0) throw std::invalid_argument("projected_gradient_l2: lambda must be > 0");
    const Index n = C.rows(), m = C.cols();
    const double step = 1.0 / double(n + m);  // 1/L with L = ||H'H||_2 = n+m

    Matrix T = Matrix::Zero(n, m);
    Matrix G(n, m), Tn(n, m);
    PgResult res;
    for (int k = 0; k < max_iters; ++k) {
        Vector r = T.rowwise().sum() - a;
        Vector s = T.colwise().sum().transpose() - b;
        G = C / lambda;
        G.colwise() += r;
        G.rowwise() += s.transpose();
        Tn = (T - step * G).cwiseMax(0.0);
        // Gradient mapping equals the projected gradient here.
        const double pg = (T - Tn).lpNorm<Eigen::Infinity>() / step;
        T.swap(Tn);
        res.iterations = k + 1;
        if (pg <= tol) {
            res.converged = true;
            break;
        }
    }
    res.plan = T;
    return res;
}

namespace {

// Euclidean projection of v onto the scaled simplex {w >= 0, sum w = s}.
Vector project_simplex(const Vector& v, double s) {
    const Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, tau = 0.0;
    Index rho = 0;
    for (Index k = 0; k < n; ++k) {
        css += u[size_t(k)];
        const double t = (css - s) / double(k + 1);
        if (u[size_t(k)] - t > 0.0) {
            rho = k + 1;
            tau = t;
        }
    }
    (void)rho;
    return (v.array() - tau).cwiseMax(0.0);
}

}  // namespace

PgResult projected_gradient_semirelaxed(const Matrix& C, const Vector& a, const Vector& b,
                                        double lambda, double tol, int max_iters) {
    if (lambda <= 0.0) throw std::invalid_argument("projected_gradient_semirelaxed: lambda must be > 0");
    const Index n = C.rows(), m = C.cols();
    const double step = 1.0 / double(m);  // ||H_r' H_r||_2 = m

    // Feasible start: split every column's mass evenly.
    Matrix T = (Vector::Ones(n) * b.transpose()) / double(n);
    Matrix G(n, m), Tn(n, m);
    PgResult res;
    for (int k = 0; k < max_iters; ++k) {
        Vector r = T.rowwise().sum() - a;
        G = C / lambda;
        G.colwise() += r;
        Tn = T - step * G;
        for (Index j = 0; j < m; ++j) Tn.col(j) = project_simplex(Tn.col(j), b[j]);
        const double gm = (T - Tn).lpNorm<Eigen::Infinity>() / step;
        T.swap(Tn);
        res.iterations = k + 1;
        if (gm <= tol) {
            res.converged = true;
            break;
        }
    }
    res.plan = T;
    return res;
}

namespace {

// Solves the flows on a spanning tree of the transportation graph by peeling
// leaves; returns false if some flow is negative beyond the tolerance.
bool tree_flows(const std::vector<std::pair<Index, Index>>& edges, const Vector& a,
                const Vector& b, std::vector<double>& flow) {
    const Index n = a.size(), m = b.size();
    const Index V = n + m;
    std::vector<std::vector<size_t>> incident(static_cast<size_t>(V));
    for (size_t e = 0; e < edges.size(); ++e) {
        incident[size_t(edges[e].first)].push_back(e);
        incident[size_t(edges[e].second + n)].push_back(e);
    }
    std::vector<int> degree(static_cast<size_t>(V));
    std::vector<bool> used(edges.size(), false);
    std::vector<double> rem(static_cast<size_t>(V));
    for (Index v = 0; v < n; ++v) rem[size_t(v)] = a[v];
    for (Index v = 0; v < m; ++v) rem[size_t(n + v)] = b[v];
    for (Index v = 0; v < V; ++v) degree[size_t(v)] = int(incident[size_t(v)].size());

    std::vector<Index> leaves;
    for (Index v = 0; v < V; ++v)
        if (degree[size_t(v)] == 1) leaves.push_back(v);

    flow.assign(edges.size(), 0.0);
    size_t processed = 0;
    while (!leaves.empty()) {
        const Index v = leaves.back();
        leaves.pop_back();
        if (degree[size_t(v)] != 1) continue;
        size_t e = 0;
        for (size_t cand : incident[size_t(v)])
            if (!used[cand]) e = cand;
        const Index u = (v < n) ? edges[e].second + n : edges[e].first;
        flow[e] = rem[size_t(v)];
        if (flow[e] < -1e-12) return false;
        if (flow[e] < 0.0) flow[e] = 0.0;
        rem[size_t(u)] -= flow[e];
        rem[size_t(v)] = 0.0;
        used[e] = true;
        ++processed;
        degree[size_t(v)] = 0;
        if (--degree[size_t(u)] == 1) leaves.push_back(u);
    }
    return processed == edges.size();
}

struct UnionFind {
    std::vector<Index> parent;
    explicit UnionFind(Index k) : parent(size_t(k)) { std::iota(parent.begin(), parent.end(), 0); }
    Index find(Index x) {
        while (parent[size_t(x)] != x) x = parent[size_t(x)] = parent[size_t(parent[size_t(x)])];
        return x;
    }
    bool unite(Index x, Index y) {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        parent[size_t(x)] = y;
        return true;
    }
};

}  // namespace

LpSolution balanced_ot_bruteforce(const Matrix& C, const Vector& a, const Vector& b) {
    const Index n = C.rows(), m = C.cols();
    if (n * m > 16) throw std::invalid_argument("balanced_ot_bruteforce: n*m exceeds 16");
    const double mass = a.sum();
    if (std::abs(mass - b.sum()) > 1e-12 * std::max(1.0, mass))
        throw std::invalid_argument("balanced_ot_bruteforce: masses differ");

    std::vector<std::pair<Index, Index>> all_edges;
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) all_edges.emplace_back(i, j);

    const Index K = n + m - 1;
    LpSolution best;
    best.cost = std::numeric_limits<double>::infinity();

    std::vector<size_t> pick(static_cast<size_t>(K));
    std::vector<std::pair<Index, Index>> edges(static_cast<size_t>(K));
    std::vector<double> flow;

    // Enumerate all K-subsets of entries; keep those forming a spanning tree.
    const size_t E = all_edges.size();
    std::vector<size_t> idx(static_cast<size_t>(K));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
        UnionFind uf(n + m);
        bool acyclic = true;
        for (Index k = 0; k < K && acyclic; ++k) {
            const auto& e = all_edges[idx[size_t(k)]];
            acyclic = uf.unite(e.first, n + e.second);
        }
        if (acyclic) {  // K acyclic edges on n+m vertices => spanning tree
            for (Index k = 0; k < K; ++k) edges[size_t(k)] = all_edges[idx[size_t(k)]];
            if (tree_flows(edges, a, b, flow)) {
                double cost = 0.0;
                for (Index k = 0; k < K; ++k) cost += C(edges[size_t(k)].first, edges[size_t(k)].second) * flow[size_t(k)];
                if (cost < best.cost) {
                    best.cost = cost;
                    best.plan = Matrix::Zero(n, m);
                    for (Index k = 0; k < K; ++k)
                        best.plan(edges[size_t(k)].first, edges[size_t(k)].second) = flow[size_t(k)];
                }
            }
        }
        // next combination
        Index k = K - 1;
        while (k >= 0 && idx[size_t(k)] == E - size_t(K - k)) --k;
        if (k < 0) break;
        ++idx[size_t(k)];
        for (Index l = k + 1; l < K; ++l) idx[size_t(l)] = idx[size_t(l - 1)] + 1;
    }
    if (!std::isfinite(best.cost))
        throw std::runtime_error("balanced_ot_bruteforce: no feasible basis found");
    return best;
}

KktResidual kkt_check(ProblemKind kind, const Matrix& plan, double lambda, const Matrix& C,
                      const Vector& a, const Vector& b) {
    if (lambda <= 0.0) throw std::invalid_argument("kkt_check: lambda must be > 0");
    const Index n = C.rows(), m = C.cols();
    if (plan.rows() != n || plan.cols() != m) throw std::invalid_argument("kkt_check: shape mismatch");

    KktResidual res;
    const Vector r = plan.rowwise().sum();
    const Vector s = plan.colwise().sum().transpose();

    if (kind == ProblemKind::Full) {
        // gamma = (1/lambda) c + H'H t - H'y
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < m; ++j) {
                const double g = C(i, j) / lambda + (r[i] + s[j]) - (a[i] + b[j]);
                const double t = plan(i, j);
                if (t > 0.0) res.stationarity_active = std::max(res.stationarity_active, std::abs(g));
                else res.dual_feasibility = std::max(res.dual_feasibility, std::max(0.0, -g));
                res.complementarity = std::max(res.complementarity, std::abs(g * t));
            }
        return res;
    }

    // Semi-relaxed: fit the column multipliers by least squares on the support.
    Vector u(m);
    for (Index j = 0; j < m; ++j) {
        double acc = 0.0;
        Index cnt = 0;
        double ming = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < n; ++i) {
            const double g = C(i, j) / lambda + (r[i] - a[i]);
            ming = std::min(ming, g);
            if (plan(i, j) > 0.0) {
                acc -= g;
                ++cnt;
            }
        }
        u[j] = cnt > 0 ? acc / double(cnt) : -ming;
    }
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < m; ++j) {
            const double g = C(i, j) / lambda + (r[i] - a[i]) + u[j];
            const double t = plan(i, j);
            if (t > 0.0) res.stationarity_active = std::max(res.stationarity_active, std::abs(g));
            else res.dual_feasibility = std::max(res.dual_feasibility, std::max(0.0, -g));
            res.complementarity = std::max(res.complementarity, std::abs(g * t));
        }
    res.primal_feasibility = (s - b).lpNorm<Eigen::Infinity>();
    return res;
}

}  // namespace uot
