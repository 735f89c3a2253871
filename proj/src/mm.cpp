#include "uot/mm.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace uot {

namespace {

void check_problem(const Matrix& C, const Vector& a, const Vector& b) {
    if (a.size() != C.rows() || b.size() != C.cols())
        throw std::invalid_argument("mm: histogram sizes do not match the cost matrix");
}

// Row/column scaling factors (a_i / r_i)^p with the degenerate cases resolved:
// r_i = 0 with a_i = 0 keeps a zero row at zero; r_i = 0 with a_i > 0 means
// the iterate can no longer reach that marginal.
Vector scaling_pow(const Vector& target, const Vector& sums, double p, const char* side) {
    Vector s(target.size());
    for (Index i = 0; i < target.size(); ++i) {
        if (sums[i] > 0.0) s[i] = std::pow(target[i] / sums[i], p);
        else if (target[i] == 0.0) s[i] = 0.0;
        else throw std::runtime_error(std::string("mm: degenerate iterate, zero ") + side +
                                      " sum with positive marginal");
    }
    return s;
}

}  // namespace

Matrix mm_initial_plan(const Vector& a, const Vector& b, MmInit init) {
    validate_histogram(a, "a");
    validate_histogram(b, "b");
    if (init == MmInit::OuterProduct) return (a * b.transpose()) / b.sum();
    const double scale = (a.sum() + b.sum()) / (2.0 * double(a.size()) * double(b.size()));
    return Matrix::Constant(a.size(), b.size(), scale);
}

Matrix mm_kl_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                  double lambda) {
    check_problem(C, a, b);
    if (lambda <= 0.0) throw std::invalid_argument("mm_kl_step: lambda must be > 0");
    const Vector u = scaling_pow(a, T.rowwise().sum(), 0.5, "row");
    const Vector v = scaling_pow(b, T.colwise().sum().transpose(), 0.5, "column");
    Matrix out = T.array() * (-C / (2.0 * lambda)).array().exp();
    out.array().colwise() *= u.array();
    out.array().rowwise() *= v.transpose().array();
    return out;
}

Matrix mm_l2_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                  double lambda) {
    check_problem(C, a, b);
    if (lambda <= 0.0) throw std::invalid_argument("mm_l2_step: lambda must be > 0");
    if ((T.array() < 0.0).any()) throw std::invalid_argument("mm_l2_step: negative plan entry");
    const Vector r = T.rowwise().sum();
    const Vector s = T.colwise().sum().transpose();
    Matrix out(T.rows(), T.cols());
    for (Index i = 0; i < T.rows(); ++i)
        for (Index j = 0; j < T.cols(); ++j) {
            // max(0, .) first so pruned entries are exact zeros.
            const double num = std::max(0.0, a[i] + b[j] - C(i, j) / lambda);
            const double t = T(i, j);
            if (t == 0.0 || num == 0.0) {
                out(i, j) = 0.0;
                continue;
            }
            out(i, j) = t * num / (r[i] + s[j]);  // t > 0 implies r_i + s_j > 0
        }
    return out;
}

Matrix mm_l2_alt_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                      double lambda) {
    check_problem(C, a, b);
    if (lambda <= 0.0) throw std::invalid_argument("mm_l2_alt_step: lambda must be > 0");
    const Vector r = T.rowwise().sum();
    const Vector s = T.colwise().sum().transpose();
    Matrix out(T.rows(), T.cols());
    for (Index i = 0; i < T.rows(); ++i)
        for (Index j = 0; j < T.cols(); ++j) {
            // The tangent quadratic bound of the linear term puts C/lambda in
            // the denominator; fixed points then satisfy the stationarity
            // condition of the quadratic objective.
            const double den = r[i] + s[j] + C(i, j) / lambda;
            if (T(i, j) == 0.0) {
                out(i, j) = 0.0;
                continue;
            }
            if (den <= 0.0) throw std::runtime_error("mm_l2_alt_step: degenerate iterate, zero denominator");
            out(i, j) = T(i, j) * (a[i] + b[j]) / den;
        }
    return out;
}

Matrix mm_ruot_step(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                    const PenaltyWeights& w) {
    check_problem(C, a, b);
    if (w.lambda1 <= 0.0 || w.lambda2 <= 0.0 || w.lambda_reg < 0.0)
        throw std::invalid_argument("mm_ruot_step: invalid weights");
    const double lam_all = w.lambda1 + w.lambda2 + w.lambda_reg;
    const Vector u = scaling_pow(a, T.rowwise().sum(), w.lambda1 / lam_all, "row");
    const Vector v = scaling_pow(b, T.colwise().sum().transpose(), w.lambda2 / lam_all, "column");
    const double p12 = (w.lambda1 + w.lambda2) / lam_all;
    const double preg = w.lambda_reg / lam_all;
    Matrix out(T.rows(), T.cols());
    for (Index i = 0; i < T.rows(); ++i)
        for (Index j = 0; j < T.cols(); ++j) {
            if (w.lambda_reg > 0.0 && a[i] * b[j] == 0.0 && T(i, j) > 0.0)
                throw std::domain_error("mm_ruot_step: zero reference mass a_i*b_j on a positive entry");
            const double kernel = std::pow(a[i] * b[j], preg) * std::exp(-C(i, j) / lam_all);
            out(i, j) = u[i] * std::pow(T(i, j), p12) * kernel * v[j];
        }
    return out;
}

namespace {

SolveReport run_iterations(const Matrix& T0, const MmConfig& config,
                           const std::function<Matrix(const Matrix&)>& step,
                           const std::function<double(const Matrix&)>& objective_of,
                           const Vector& a, const Vector& b) {
    if (config.max_iters < 1 || config.rel_tol <= 0.0)
        throw std::invalid_argument("mm: invalid config");
    SolveReport report;
    Matrix T = T0;
    double obj = objective_of(T);
    if (config.record_trace) report.objective_trace.push_back(obj);
    for (int k = 0; k < config.max_iters; ++k) {
        T = step(T);
        const double next = objective_of(T);
        if (config.record_trace) report.objective_trace.push_back(next);
        report.iterations = k + 1;
        if (obj - next <= config.rel_tol * std::max(std::abs(obj), 1e-300)) {
            report.converged = true;
            obj = next;
            break;
        }
        obj = next;
    }
    report.plan = std::move(T);
    report.final_objective = obj;
    report.marginal_error_rows = (report.plan.rowwise().sum() - a).lpNorm<Eigen::Infinity>();
    report.marginal_error_cols =
        (report.plan.colwise().sum().transpose() - b).lpNorm<Eigen::Infinity>();
    return report;
}

}  // namespace

SolveReport solve_mm(MmMethod method, const Matrix& C, const Vector& a, const Vector& b,
                     double lambda, const MmConfig& config) {
    check_problem(C, a, b);
    const Matrix T0 = mm_initial_plan(a, b, config.init);
    const DivergenceKind kind =
        method == MmMethod::Kl ? DivergenceKind::KL : DivergenceKind::QuadraticL2;
    auto step = [&](const Matrix& T) {
        switch (method) {
            case MmMethod::Kl: return mm_kl_step(T, C, a, b, lambda);
            case MmMethod::L2: return mm_l2_step(T, C, a, b, lambda);
            default: return mm_l2_alt_step(T, C, a, b, lambda);
        }
    };
    auto obj = [&](const Matrix& T) { return objective(kind, lambda, T, C, a, b); };
    return run_iterations(T0, config, step, obj, a, b);
}

SolveReport solve_mm_ruot(const Matrix& C, const Vector& a, const Vector& b,
                          const PenaltyWeights& w, const MmConfig& config) {
    check_problem(C, a, b);
    const Matrix T0 = mm_initial_plan(a, b, config.init);
    auto step = [&](const Matrix& T) { return mm_ruot_step(T, C, a, b, w); };
    auto obj = [&](const Matrix& T) {
        return objective_regularized(DivergenceKind::KL, w, T, C, a, b);
    };
    return run_iterations(T0, config, step, obj, a, b);
}

Matrix ipot_solve(const Matrix& C, const Vector& a, const Vector& b, double lambda,
                  int outer_iters, int inner_sinkhorn_iters) {
    check_problem(C, a, b);
    validate_histogram(a, "a");
    validate_histogram(b, "b");
    if (lambda <= 0.0) throw std::invalid_argument("ipot_solve: lambda must be > 0");
    if (outer_iters < 1 || inner_sinkhorn_iters < 1)
        throw std::invalid_argument("ipot_solve: iteration counts must be >= 1");
    if (std::abs(a.sum() - b.sum()) > 1e-12 * std::max(1.0, a.sum()))
        throw std::invalid_argument("ipot_solve: masses must be balanced");
    if (a.minCoeff() <= 0.0 || b.minCoeff() <= 0.0)
        throw std::invalid_argument("ipot_solve: histograms must be strictly positive");

    const Matrix G = (-C / lambda).array().exp();
    Matrix T = (a * b.transpose()) / a.sum();
    Vector v = Vector::Ones(b.size());  // carried across outer iterations
    for (int k = 0; k < outer_iters; ++k) {
        const Matrix K = G.array() * T.array();
        Vector u(a.size());
        for (int it = 0; it < inner_sinkhorn_iters; ++it) {
            const Vector Kv = K * v;
            if ((Kv.array() <= 0.0).any())
                throw std::runtime_error("ipot_solve: degenerate kernel (zero row)");
            u = a.array() / Kv.array();
            const Vector Ktu = K.transpose() * u;
            if ((Ktu.array() <= 0.0).any())
                throw std::runtime_error("ipot_solve: degenerate kernel (zero column)");
            v = b.array() / Ktu.array();
        }
        T = u.asDiagonal() * K * v.asDiagonal();
    }
    return T;
}

}  // namespace uot
