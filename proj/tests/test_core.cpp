#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "uot/types.hpp"

#include <chrono>

using namespace uot;

TEST_CASE("apply_design on small plans") {
    DesignOperator H(2, 2);
    Matrix T(2, 2);
    T << 1, 2, 3, 4;
    Vector s = apply_design(H, T);
    CHECK(s.isApprox((Vector(4) << 3, 7, 4, 6).finished()));

    CHECK(apply_design(H, Matrix::Zero(2, 2)).isZero(0.0));
    CHECK(apply_design(H, Matrix::Identity(2, 2)).isApprox(Vector::Ones(4)));
}

TEST_CASE("apply_design rejects shape mismatch") {
    DesignOperator H(2, 3);
    CHECK_THROWS_AS(apply_design(H, Matrix::Zero(3, 2)), std::invalid_argument);
    CHECK_THROWS_AS(apply_design_vec(H, Vector::Zero(5)), std::invalid_argument);
    CHECK_THROWS_AS(apply_design_adjoint(H, Vector::Zero(4)), std::invalid_argument);
    CHECK_THROWS_AS(gram_apply(H, Vector::Zero(7)), std::invalid_argument);
}

TEST_CASE("apply_design_adjoint broadcasts a_i + b_j") {
    DesignOperator H(2, 2);
    Vector s(4);
    s << 1, 2, 3, 4;
    CHECK(apply_design_adjoint(H, s).isApprox((Vector(4) << 4, 5, 5, 6).finished()));
    CHECK(apply_design_adjoint(H, Vector::Zero(4)).isZero(0.0));

    DesignOperator H13(1, 3);
    Vector s13(4);
    s13 << 1, 1, 1, 1;
    CHECK(apply_design_adjoint(H13, s13).isApprox((Vector(3) << 2, 2, 2).finished()));
}

TEST_CASE("gram_apply equals row-sum plus column-sum") {
    DesignOperator H(2, 2);
    CHECK(gram_apply(H, vec_rowmajor(Matrix::Identity(2, 2)))
              .isApprox(Vector::Constant(4, 2.0)));
    CHECK(gram_apply(H, Vector::Zero(4)).isZero(0.0));

    Matrix T(2, 2);
    T << 1, 2, 3, 4;
    CHECK(gram_apply(H, vec_rowmajor(T)).isApprox((Vector(4) << 7, 9, 11, 13).finished()));
}

TEST_CASE("adjoint identity <Ht,s> == <t,H's> on random data") {
    uot_test::Rng rng(11);
    for (int rep = 0; rep < 100; ++rep) {
        const Index n = 1 + rep % 20, m = 1 + (rep * 7) % 30;
        DesignOperator H(n, m);
        const Vector t = rng.vec(n * m);
        const Vector s = rng.vec(n + m);
        const double lhs = apply_design_vec(H, t).dot(s);
        const double rhs = t.dot(apply_design_adjoint(H, s));
        const double scale = std::max(1.0, std::abs(lhs));
        CHECK(std::abs(lhs - rhs) <= 1e-12 * scale);
    }
}

TEST_CASE("gram_apply equals adjoint of apply on random data") {
    uot_test::Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 2 + rep % 6, m = 2 + (rep * 3) % 7;
        DesignOperator H(n, m);
        const Vector t = rng.vec(n * m);
        const Vector direct = gram_apply(H, t);
        const Vector composed = apply_design_adjoint(H, apply_design_vec(H, t));
        CHECK((direct - composed).lpNorm<Eigen::Infinity>() <=
              1e-14 * std::max(1.0, direct.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("operators are linear") {
    uot_test::Rng rng(13);
    DesignOperator H(4, 5);
    for (int rep = 0; rep < 20; ++rep) {
        const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
        const Vector x = rng.vec(20), y = rng.vec(20);
        const Vector sx = rng.vec(9), sy = rng.vec(9);
        CHECK((apply_design_vec(H, (alpha * x + beta * y).eval()) -
               (alpha * apply_design_vec(H, x) + beta * apply_design_vec(H, y)))
                  .norm() <= 1e-12 * (1.0 + x.norm() + y.norm()));
        CHECK((apply_design_adjoint(H, (alpha * sx + beta * sy).eval()) -
               (alpha * apply_design_adjoint(H, sx) + beta * apply_design_adjoint(H, sy)))
                  .norm() <= 1e-12 * (1.0 + sx.norm() + sy.norm()));
        CHECK((gram_apply(H, (alpha * x + beta * y).eval()) -
               (alpha * gram_apply(H, x) + beta * gram_apply(H, y)))
                  .norm() <= 1e-12 * (1.0 + x.norm() + y.norm()));
    }
}

TEST_CASE("row-major vectorization convention") {
    Matrix T(2, 3);
    T << 1, 2, 3, 4, 5, 6;
    const Vector t = vec_rowmajor(T);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 3; ++j) CHECK(t[i * 3 + j] == T(i, j));
    CHECK(mat_from_vec(t, 2, 3) == T);
}

TEST_CASE("flat index bijection") {
    const Index m = 7;
    for (Index i = 0; i < 5; ++i)
        for (Index j = 0; j < m; ++j) {
            const FlatIndex q = make_flat_index(i, j, m);
            const FlatIndex back = from_flat(q.flat, m);
            CHECK(back.i == i);
            CHECK(back.j == j);
        }
}

TEST_CASE("matrix-free operators stay fast at n*m = 1e4") {
    // A materialized Gram would be 1e8 entries; the matrix-free ops must
    // run this smoke loop in far less than a second.
    DesignOperator H(100, 100);
    uot_test::Rng rng(14);
    Vector t = rng.vec(10000);
    const auto start = std::chrono::steady_clock::now();
    for (int rep = 0; rep < 50; ++rep) t = gram_apply(H, t) / double(200);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < 1.0);
    CHECK(t.allFinite());
}

TEST_CASE("validation rejects bad histograms and costs") {
    CHECK_THROWS_AS(validate_histogram((Vector(2) << 1, -0.5).finished(), "a"),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate_histogram(Vector::Zero(3), "a"), std::invalid_argument);
    CHECK_THROWS_AS(validate_histogram((Vector(1) << std::nan("")).finished(), "a"),
                    std::invalid_argument);
    Matrix C(1, 2);
    C << 1, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_cost_matrix(C), std::invalid_argument);
    C << 1, -2;
    CHECK_THROWS_AS(validate_cost_matrix(C), std::invalid_argument);
}
