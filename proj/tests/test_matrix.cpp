#include <catch2/catch_amalgamated.hpp>

#include "explq/matrix.hpp"
#include "explq/rng.hpp"

using namespace explq;

TEST_CASE("gauss_inverse recovers the identity", "[matrix]") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + (trial % 3);
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.next_normal();
        for (std::size_t i = 0; i < n; ++i) m(i, i) += 3.0;  // keep well-conditioned
        const auto inv = gauss_inverse(m);
        REQUIRE(inv.has_value());
        const Matrix prod = *inv * m;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                REQUIRE(prod(i, j) == Catch::Approx(i == j ? 1.0 : 0.0).margin(1e-12));
    }
}

TEST_CASE("gauss_inverse rejects rank-deficient matrices", "[matrix]") {
    Matrix m(2, 2, {1.0, 2.0, 2.0, 4.0});
    REQUIRE_FALSE(gauss_inverse(m).has_value());
}

TEST_CASE("relative pivot tolerance accepts tiny but healthy matrices", "[matrix]") {
    Matrix m(2, 2, {3e-16, 1e-16, 1e-16, 2e-16});
    const auto inv = gauss_inverse(m);
    REQUIRE(inv.has_value());
    const Matrix prod = *inv * m;
    REQUIRE(prod(0, 0) == Catch::Approx(1.0).margin(1e-10));
    REQUIRE(prod(1, 1) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("cholesky distinguishes SPD from indefinite", "[matrix]") {
    const Matrix spd = Matrix::sym2(4.0, 1.0, 3.0);
    const auto l = cholesky_lower(spd);
    REQUIRE(l.has_value());
    const Matrix back = *l * l->transposed();
    REQUIRE(back(0, 0) == Catch::Approx(4.0));
    REQUIRE(back(0, 1) == Catch::Approx(1.0));
    REQUIRE(back(1, 1) == Catch::Approx(3.0));
    REQUIRE(std::abs(log_det_from_cholesky(*l) - std::log(4.0 * 3.0 - 1.0)) < 1e-12);

    REQUIRE_FALSE(cholesky_lower(Matrix::sym2(1.0, 2.0, 1.0)).has_value());
    REQUIRE_FALSE(cholesky_lower(Matrix::sym2(-1.0, 0.0, 1.0)).has_value());
}

TEST_CASE("symmetrize and trace_product", "[matrix]") {
    Matrix m(2, 2, {1.0, 2.0, 4.0, 3.0});
    m.symmetrize();
    REQUIRE(m(0, 1) == 3.0);
    REQUIRE(m(1, 0) == 3.0);

    const Matrix a(2, 2, {1.0, 2.0, 3.0, 4.0});
    const Matrix b(2, 2, {5.0, 6.0, 7.0, 8.0});
    const Matrix ab = a * b;
    REQUIRE(trace_product(a, b) == Catch::Approx(ab(0, 0) + ab(1, 1)));
}
