#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "uot/mm.hpp"
#include "uot/oracle.hpp"

using namespace uot;

namespace {

Vector ones2 = (Vector(2) << 1, 1).finished();

// Stationarity residual of the KL objective on the support.
double kl_stationarity(const Matrix& T, const Matrix& C, const Vector& a, const Vector& b,
                       double lambda) {
    const DesignOperator H(T.rows(), T.cols());
    Vector y(a.size() + b.size());
    y << a, b;
    const Vector Ht = apply_design(H, T);
    Vector dphi(y.size());
    for (Index k = 0; k < y.size(); ++k) dphi[k] = std::log(Ht[k]) - std::log(y[k]);
    const Vector grad = vec_rowmajor(C) / lambda + apply_design_adjoint(H, dphi);
    double res = 0;
    for (Index i = 0; i < T.rows(); ++i)
        for (Index j = 0; j < T.cols(); ++j)
            if (T(i, j) > 1e-12) res = std::max(res, std::abs(grad[i * T.cols() + j]));
    return res;
}

}  // namespace

TEST_CASE("mm_kl_step on fixtures") {
    // Symmetric rescaling of the all-ones plan.
    Matrix T = Matrix::Ones(2, 2);
    Matrix next = mm_kl_step(T, Matrix::Zero(2, 2), ones2, ones2, 1.0);
    CHECK((next - Matrix::Constant(2, 2, 0.5)).lpNorm<Eigen::Infinity>() <= 1e-15);

    // A plan matching both marginals is a fixed point when C = 0.
    Matrix feasible(2, 2);
    feasible << 0.3, 0.7, 0.7, 0.3;
    next = mm_kl_step(feasible, Matrix::Zero(2, 2), ones2, ones2, 3.0);
    CHECK((next - feasible).lpNorm<Eigen::Infinity>() <= 1e-15);

    // Off-diagonal costs t = 2*lambda*log(2) damp those entries by one half
    // before the marginal rescaling.
    const double lambda = 0.8, t = 2 * lambda * std::log(2.0);
    Matrix C(2, 2);
    C << 0, t, t, 0;
    next = mm_kl_step(Matrix::Ones(2, 2), C, ones2, ones2, lambda);
    Matrix expect(2, 2);
    expect << 0.5, 0.25, 0.25, 0.5;
    CHECK((next - expect).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("mm_kl_step degenerate iterate") {
    Matrix T(2, 2);
    T << 0, 0, 1, 1;  // row 0 empty but a_0 > 0
    CHECK_THROWS_AS(mm_kl_step(T, Matrix::Zero(2, 2), ones2, ones2, 1.0), std::runtime_error);
}

TEST_CASE("mm_l2_step prunes and rescales") {
    Matrix C(2, 2);
    C << 0, 2, 2, 0;
    Matrix next = mm_l2_step(Matrix::Ones(2, 2), C, ones2, ones2, 1.0);
    Matrix expect(2, 2);
    expect << 0.5, 0, 0, 0.5;
    CHECK((next - expect).lpNorm<Eigen::Infinity>() == 0.0);

    // Pruned entries are exact zeros from the first application on.
    CHECK(next(0, 1) == 0.0);
    CHECK(mm_l2_step(next, C, ones2, ones2, 1.0)(0, 1) == 0.0);

    CHECK_THROWS_AS(mm_l2_step((Matrix(2, 2) << -1, 1, 1, 1).finished(), C, ones2, ones2, 1.0),
                    std::invalid_argument);
}

TEST_CASE("mm_l2_step fixed point at the oracle solution") {
    uot_test::Rng rng(31);
    const Matrix C = rng.costs(4, 4);
    const Vector a = rng.histogram(4), b = rng.histogram(4);
    const PgResult pg = projected_gradient_l2(C, a, b, 1.0, 1e-13);
    REQUIRE(pg.converged);
    const Matrix next = mm_l2_step(pg.plan, C, a, b, 1.0);
    CHECK((next - pg.plan).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("mm_l2_step support certificate") {
    uot_test::Rng rng(32);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 3 + rep % 4, m = 3 + (rep * 5) % 4;
        const Matrix C = rng.costs(n, m, 0.0, 2.0);
        const Vector a = rng.histogram(n), b = rng.histogram(m);
        const double lambda = rng.uniform(0.2, 3.0);
        const Matrix T1 = mm_l2_step(mm_initial_plan(a, b, MmInit::OuterProduct), C, a, b, lambda);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < m; ++j)
                if (T1(i, j) != 0.0) CHECK(lambda * (a[i] + b[j]) >= C(i, j));
    }
}

TEST_CASE("mm_l2_alt_step on fixtures") {
    // C = 0 with matched marginals: fixed point.
    Matrix uniform = Matrix::Constant(2, 2, 0.5);
    Matrix next = mm_l2_alt_step(uniform, Matrix::Zero(2, 2), ones2, ones2, 1.0);
    CHECK((next - uniform).lpNorm<Eigen::Infinity>() <= 1e-15);

    Matrix C(2, 2);
    C << 0, 2, 2, 0;
    next = mm_l2_alt_step(Matrix::Ones(2, 2), C, ones2, ones2, 1.0);
    Matrix expect(2, 2);
    expect << 0.5, 1.0 / 3.0, 1.0 / 3.0, 0.5;  // denominators 4 and 4 + 2/1
    CHECK((next - expect).lpNorm<Eigen::Infinity>() <= 1e-15);

    // Positive fixed points coincide with the stationarity condition: the
    // update leaves the thresholded solver's limit unchanged on its support.
    Vector a(2), b(2);
    a << 1, 1;
    b << 1, 1;
    MmConfig cfg;
    cfg.rel_tol = 1e-15;
    cfg.max_iters = 100000;
    const Matrix limit = solve_mm(MmMethod::L2, C, a, b, 2.0, cfg).plan;
    const Matrix stepped = mm_l2_alt_step(limit, C, a, b, 2.0);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
            if (limit(i, j) > 0) CHECK(std::abs(stepped(i, j) - limit(i, j)) <= 1e-10);
}

TEST_CASE("mm_l2_alt limit agrees with mm_l2 on its support") {
    uot_test::Rng rng(33);
    const Matrix C = rng.costs(5, 5);
    const Vector a = rng.histogram(5), b = rng.histogram(5);
    MmConfig cfg;
    cfg.rel_tol = 1e-15;
    cfg.max_iters = 500000;
    const SolveReport thresholded = solve_mm(MmMethod::L2, C, a, b, 1.0, cfg);
    const SolveReport smooth = solve_mm(MmMethod::L2Alt, C, a, b, 1.0, cfg);
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < 5; ++j)
            if (thresholded.plan(i, j) > 0.0)
                CHECK(std::abs(thresholded.plan(i, j) - smooth.plan(i, j)) <= 1e-6);
}

TEST_CASE("mm_ruot_step reduces to mm_kl_step at lambda_reg = 0") {
    uot_test::Rng rng(34);
    const Matrix C = rng.costs(4, 4);
    const Vector a = rng.histogram(4), b = rng.histogram(4);
    Matrix T = mm_initial_plan(a, b, MmInit::OuterProduct);
    for (double lambda : {0.3, 1.0, 7.0}) {
        const Matrix kl = mm_kl_step(T, C, a, b, lambda);
        const Matrix ruot = mm_ruot_step(T, C, a, b, PenaltyWeights{lambda, lambda, 0.0});
        CHECK((kl - ruot).lpNorm<Eigen::Infinity>() <=
              1e-14 * std::max(1.0, kl.lpNorm<Eigen::Infinity>()));
        T = kl;
    }
}

TEST_CASE("mm_ruot_step fixed point and domain error") {
    Vector a(2), b(2);
    a << 0.5, 0.5;
    b << 0.5, 0.5;
    const Matrix R = a * b.transpose();  // unit masses, so T1 = a and T'1 = b
    const Matrix next = mm_ruot_step(R, Matrix::Zero(2, 2), a, b, PenaltyWeights{1.0, 1.0, 0.0});
    CHECK((next - R).lpNorm<Eigen::Infinity>() <= 1e-15);

    Vector a0(2);
    a0 << 1, 0;
    Matrix T = Matrix::Ones(2, 2);
    CHECK_THROWS_AS(mm_ruot_step(T, Matrix::Zero(2, 2), a0, b, PenaltyWeights{1.0, 1.0, 0.5}),
                    std::domain_error);
}

TEST_CASE("mm_ruot long-run limit satisfies first-order conditions") {
    uot_test::Rng rng(35);
    const Matrix C = rng.costs(3, 3);
    Vector a = rng.histogram(3), b = rng.histogram(3);
    a /= a.sum();
    b /= b.sum();
    const PenaltyWeights w{1.0, 2.0, 1.0};
    MmConfig cfg;
    cfg.rel_tol = 1e-15;
    cfg.max_iters = 300000;
    const SolveReport rep = solve_mm_ruot(C, a, b, w, cfg);
    // Central finite differences of the regularized objective on the support.
    const double h = 1e-7;
    for (Index i = 0; i < 3; ++i)
        for (Index j = 0; j < 3; ++j) {
            REQUIRE(rep.plan(i, j) > 0.0);
            Matrix Tp = rep.plan, Tm = rep.plan;
            Tp(i, j) += h;
            Tm(i, j) -= h;
            const double fd = (objective_regularized(DivergenceKind::KL, w, Tp, C, a, b) -
                               objective_regularized(DivergenceKind::KL, w, Tm, C, a, b)) /
                              (2 * h);
            CHECK(std::abs(fd) <= 1e-6);
        }
}

TEST_CASE("zero persistence of the multiplicative updates") {
    uot_test::Rng rng(36);
    const Matrix C = rng.costs(3, 3);
    Vector a = rng.histogram(3), b = rng.histogram(3);
    Matrix T = rng.costs(3, 3, 0.1, 1.0);
    T(1, 2) = 0.0;
    T(0, 0) = 0.0;
    CHECK(mm_kl_step(T, C, a, b, 1.0)(1, 2) == 0.0);
    CHECK(mm_l2_step(T, C, a, b, 1.0)(0, 0) == 0.0);
    CHECK(mm_ruot_step(T, C, a, b, PenaltyWeights{1, 1, 0})(1, 2) == 0.0);
}

TEST_CASE("small step residual implies small complementarity residual") {
    // Multiplicative structure ties the two: gamma_q * t_q = den_q * (T - T')_q,
    // so |gamma .* t| is within a den-sized constant of the step residual.
    // (Stationarity restricted to the support is not O(step residual): an
    // entry decaying through 1e-200 moves by almost nothing per step while
    // its multiplier stays finite.)
    uot_test::Rng rng(44);
    for (int rep = 0; rep < 10; ++rep) {
        const Matrix C = rng.costs(5, 5);
        const Vector a = rng.histogram(5), b = rng.histogram(5);
        const double lambda = rng.uniform(0.3, 3.0);
        MmConfig cfg;
        cfg.rel_tol = 1e-8;
        cfg.max_iters = 100000;
        const SolveReport rep_mm = solve_mm(MmMethod::L2, C, a, b, lambda, cfg);
        const double eps =
            (mm_l2_step(rep_mm.plan, C, a, b, lambda) - rep_mm.plan).lpNorm<Eigen::Infinity>();
        const KktResidual kkt = kkt_check(ProblemKind::Full, rep_mm.plan, lambda, C, a, b);
        const double den_bound = 2.0 * rep_mm.plan.sum() + 1.0;
        CHECK(kkt.complementarity <= den_bound * eps + 1e-14);
        CHECK(kkt.dual_feasibility <= den_bound * eps + 1e-14);
    }
}

TEST_CASE("solve_mm on the closed-form 2x2 problem") {
    Matrix C(2, 2);
    C << 1, 2, 2, 1;
    MmConfig cfg;
    cfg.rel_tol = 1e-15;
    cfg.max_iters = 200000;
    const SolveReport rep = solve_mm(MmMethod::L2, C, ones2, ones2, 1.0, cfg);
    CHECK(rep.converged);
    CHECK((rep.plan - 0.5 * Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-9);
}

TEST_CASE("solve_mm KL with zero cost approaches feasibility") {
    uot_test::Rng rng(37);
    const Vector a = rng.histogram(3), b = rng.histogram(3);
    MmConfig cfg;
    cfg.rel_tol = 1e-14;
    cfg.max_iters = 300000;
    cfg.record_trace = true;
    const SolveReport rep = solve_mm(MmMethod::Kl, Matrix::Zero(3, 3), a, b, 1.0, cfg);
    for (size_t k = 1; k < rep.objective_trace.size(); ++k)
        CHECK(rep.objective_trace[k] <=
              rep.objective_trace[k - 1] + 1e-10 * std::abs(rep.objective_trace[k - 1]));
    CHECK(kl_stationarity(rep.plan, Matrix::Zero(3, 3), a, b, 1.0) <= 1e-6);
}

TEST_CASE("solve_mm l2 at huge lambda approaches balanced OT") {
    uot_test::Rng rng(38);
    const Matrix C = rng.costs(3, 3);
    Vector a = rng.histogram(3), b = rng.histogram(3);
    uot_test::balance(a, b);
    const LpSolution lp = balanced_ot_bruteforce(C, a, b);
    // Entries outside the LP support decay at rate 1 - O(1/lambda), so this
    // needs tens of millions of (cheap, 3x3) iterations.
    MmConfig cfg;
    cfg.rel_tol = 1e-300;
    cfg.max_iters = 50000000;
    const SolveReport rep = solve_mm(MmMethod::L2, C, a, b, 1e6, cfg);
    CHECK(std::abs((C.array() * rep.plan.array()).sum() - lp.cost) <= 1e-3);
}

TEST_CASE("solve_mm descent across solvers and lambdas") {
    uot_test::Rng rng(39);
    const Matrix C = rng.costs(4, 4);
    const Vector a = rng.histogram(4), b = rng.histogram(4);
    MmConfig cfg;
    cfg.max_iters = 2000;
    cfg.rel_tol = 1e-13;
    cfg.record_trace = true;
    for (double lambda : {0.1, 1.0, 10.0}) {
        for (auto method : {MmMethod::Kl, MmMethod::L2, MmMethod::L2Alt}) {
            const SolveReport rep = solve_mm(method, C, a, b, lambda, cfg);
            for (size_t k = 1; k < rep.objective_trace.size(); ++k)
                CHECK(rep.objective_trace[k] <=
                      rep.objective_trace[k - 1] + 1e-10 * std::abs(rep.objective_trace[k - 1]));
        }
        const SolveReport rep = solve_mm_ruot(C, a, b, PenaltyWeights{lambda, 2 * lambda, lambda},
                                              cfg);
        for (size_t k = 1; k < rep.objective_trace.size(); ++k)
            CHECK(rep.objective_trace[k] <=
                  rep.objective_trace[k - 1] + 1e-10 * std::abs(rep.objective_trace[k - 1]));
    }
}

TEST_CASE("solve_mm flags non-convergence instead of throwing") {
    uot_test::Rng rng(40);
    const Matrix C = rng.costs(4, 4);
    const Vector a = rng.histogram(4), b = rng.histogram(4);
    MmConfig cfg;
    cfg.max_iters = 2;
    cfg.rel_tol = 1e-16;
    const SolveReport rep = solve_mm(MmMethod::Kl, C, a, b, 10.0, cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations == 2);
}

TEST_CASE("ipot with zero cost matches marginals after one pass") {
    Vector a(2), b(2);
    a << 0.4, 0.6;
    b << 0.3, 0.7;
    const Matrix T = ipot_solve(Matrix::Zero(2, 2), a, b, 1.0, 1, 1);
    CHECK((T.rowwise().sum() - a).lpNorm<Eigen::Infinity>() <= 1e-12);
}

TEST_CASE("ipot solves the 2x2 fixture exactly") {
    Matrix C(2, 2);
    C << 1, 2, 2, 1;
    Vector ab(2);
    ab << 0.5, 0.5;
    const Matrix T = ipot_solve(C, ab, ab, 0.5, 2000, 1);
    CHECK((T - 0.5 * Matrix::Identity(2, 2)).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK((C.array() * T.array()).sum() == doctest::Approx(1.0));
}

TEST_CASE("ipot matches the LP oracle on random balanced instances") {
    uot_test::Rng rng(41);
    for (int rep = 0; rep < 5; ++rep) {
        const Matrix C = rng.costs(3, 3);
        Vector a = rng.histogram(3), b = rng.histogram(3);
        uot_test::balance(a, b);
        const LpSolution lp = balanced_ot_bruteforce(C, a, b);
        const Matrix T = ipot_solve(C, a, b, 0.1, 5000, 1);
        CHECK(std::abs((C.array() * T.array()).sum() - lp.cost) <= 1e-6);
    }
}

TEST_CASE("ipot rejects unbalanced masses") {
    Vector a(2), b(2);
    a << 1, 1;
    b << 1, 2;
    CHECK_THROWS_AS(ipot_solve(Matrix::Zero(2, 2), a, b, 1.0, 10, 1), std::invalid_argument);
}
