#include <doctest.h>

#include <random>

#include "lstmctl/errors.hpp"
#include "lstmctl/linalg.hpp"
#include "oracles.hpp"

using namespace lstmctl;

TEST_SUITE("linalg") {

TEST_CASE("spectral norm of zero and diagonal matrices") {
    CHECK(spectral_norm(Matrix(3, 3)) == 0.0);
    Matrix d(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = -4.0;
    CHECK(spectral_norm(d) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("spectral norm matches a Jacobi eigen oracle") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : {1u, 2u, 5u, 7u, 12u}) {
        Matrix m(n, n);
        for (double& v : m.data()) v = u(rng);
        const double ref = oracle::spectral_norm(m);
        CHECK(std::abs(spectral_norm(m) - ref) <= 1e-9 * ref);
    }
    Matrix rect(3, 7);
    for (double& v : rect.data()) v = u(rng);
    CHECK(std::abs(spectral_norm(rect) - oracle::spectral_norm(rect)) <= 1e-9 * oracle::spectral_norm(rect));
}

TEST_CASE("top singular pair reproduces the norm") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(4, 6);
    for (double& v : m.data()) v = u(rng);
    const SingularPair sp = top_singular(m);
    const Vector mv = matvec(m, sp.v);
    for (std::size_t r = 0; r < 4; ++r) CHECK(mv[r] == doctest::Approx(sp.sigma * sp.u[r]).epsilon(1e-8));
    CHECK(norm2(sp.u) == doctest::Approx(1.0));
    CHECK(norm2(sp.v) == doctest::Approx(1.0));
}

TEST_CASE("linear solve and its singular case") {
    Matrix a(3, 3, {4, 1, 0, 1, 3, 1, 0, 1, 2});
    const Vector x = solve_linear(a, {1, 2, 3});
    const Vector back = matvec(a, x);
    CHECK(back[0] == doctest::Approx(1.0));
    CHECK(back[1] == doctest::Approx(2.0));
    CHECK(back[2] == doctest::Approx(3.0));
    CHECK_THROWS_AS(solve_linear(Matrix(2, 2, {1, 2, 2, 4}), {1, 1}), NumericalError);
}

TEST_CASE("symmetric 2x2 eigenvalues") {
    const auto [lo, hi] = sym_eig_2x2(2.0, 1.0, 2.0);
    CHECK(lo == doctest::Approx(1.0));
    CHECK(hi == doctest::Approx(3.0));
}

TEST_CASE("infinity norms") {
    Matrix m(2, 3, {1, -2, 3, -4, 0, 0.5});
    CHECK(norm_inf(m) == 6.0);
    const Vector v{1.0, -7.0, 2.0};
    CHECK(norm_inf(v) == 7.0);
}

}
