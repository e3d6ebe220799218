#include <cmath>

#include "doctest.h"
#include "obwalk/numerics.hpp"

using namespace obwalk;

namespace {
const Complex kI(0.0, 1.0);
}

TEST_CASE("matrix exponential reproduces the planar rotation") {
    const double theta = 0.37;
    CMatrix g(2, 2);
    g << 0.0, theta, -theta, 0.0;
    CMatrix e = matrix_exponential(g);
    CMatrix expect(2, 2);
    expect << std::cos(theta), std::sin(theta), -std::sin(theta),
        std::cos(theta);
    CHECK(distance(e, expect) < 1e-14);
}

TEST_CASE("matrix exponential of a diagonal is entrywise exp") {
    CMatrix g = CMatrix::Zero(2, 2);
    g(0, 0) = Complex(0.2, -0.4);
    g(1, 1) = Complex(-1.1, 0.9);
    CMatrix e = matrix_exponential(g);
    CHECK(std::abs(e(0, 0) - std::exp(g(0, 0))) < 1e-14);
    CHECK(std::abs(e(1, 1) - std::exp(g(1, 1))) < 1e-14);
    CHECK(std::abs(e(0, 1)) == 0.0);
}

TEST_CASE("exponential of a skew-Hermitian matrix is unitary") {
    CMatrix h(3, 3);
    h << Complex(0.3, 0.0), Complex(0.1, 0.7), Complex(-0.2, 0.4),
        Complex(0.1, -0.7), Complex(-0.5, 0.0), Complex(0.9, 0.1),
        Complex(-0.2, -0.4), Complex(0.9, -0.1), Complex(0.8, 0.0);
    CMatrix u = matrix_exponential(-kI * h);
    CHECK(is_unitary(u, 1e-12));
}

TEST_CASE("partial trace over the environment factor inverts the product") {
    CMatrix a(2, 2), b(3, 3);
    a << Complex(1.0, 0.2), Complex(0.3, -0.1), Complex(-0.4, 0.5),
        Complex(0.7, 0.0);
    b.setZero();
    b(0, 0) = 2.0;
    b(1, 1) = Complex(0.5, 0.25);
    b(2, 2) = Complex(-1.0, 0.75);
    b(0, 2) = Complex(0.3, 0.3);
    CMatrix prod = tensor_product(a, b);
    REQUIRE(prod.rows() == 6);
    CHECK(distance(partial_trace_env(prod, 2, 3), b.trace() * a) < 1e-14);
    // System factor first: entry (i*3+k, j*3+l) = a(i,j) b(k,l).
    CHECK(std::abs(prod(0 * 3 + 1, 1 * 3 + 1) - a(0, 1) * b(1, 1)) < 1e-15);
}

TEST_CASE("tensor product of basis vectors hits the expected slot") {
    CVector ea = basis_vector(2, 1);
    CVector eb = basis_vector(3, 2);
    CVector v = tensor_product(ea, eb);
    REQUIRE(v.size() == 6);
    for (Eigen::Index k = 0; k < 6; ++k)
        CHECK(std::abs(v(k) - (k == 1 * 3 + 2 ? 1.0 : 0.0)) == 0.0);
}

TEST_CASE("outer and inner follow the first-argument-conjugate convention") {
    CVector a(2), b(2);
    a << Complex(0.0, 1.0), Complex(2.0, 0.0);
    b << Complex(1.0, 0.0), Complex(0.0, -1.0);
    // <a,b> = conj(i)*1 + conj(2)*(-i) = -3i
    CHECK(std::abs(inner(a, b) - Complex(0.0, -3.0)) < 1e-15);
    CMatrix m = outer(a, b);
    // |a><b| applied to b gives <b,b> a.
    CHECK(distance(m * b, CMatrix(inner(b, b) * a)) < 1e-14);
    CHECK(std::abs(m(0, 1) - a(0) * std::conj(b(1))) < 1e-15);
}

TEST_CASE("principal square root of the mixed-template base matrix") {
    CMatrix m0(2, 2);
    m0 << 0.0, kI, kI, 0.0;
    CMatrix r = principal_sqrt(m0);
    CHECK(distance(r * r, m0) < 1e-12);
    CMatrix expect(2, 2);
    expect << 1.0, kI, kI, 1.0;
    expect /= std::sqrt(2.0);
    CHECK(distance(r, expect) < 1e-12);
}

TEST_CASE("density matrix predicate accepts states and rejects non-states") {
    CMatrix rho = CMatrix::Zero(2, 2);
    rho(0, 0) = 0.75;
    rho(1, 1) = 0.25;
    rho(0, 1) = Complex(0.1, 0.2);
    rho(1, 0) = Complex(0.1, -0.2);
    CHECK(is_density_matrix(rho, 1e-10));
    CMatrix bad = rho;
    bad(0, 0) = 1.5;  // trace off
    CHECK_FALSE(is_density_matrix(bad, 1e-10));
    CMatrix neg = CMatrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;  // negative eigenvalue
    CHECK_FALSE(is_density_matrix(neg, 1e-10));
}

TEST_CASE("all_finite flags NaN and infinity") {
    CMatrix m = CMatrix::Identity(2, 2);
    CHECK(all_finite(m));
    m(0, 1) = Complex(std::nan(""), 0.0);
    CHECK_FALSE(all_finite(m));
    m(0, 1) = Complex(0.0, HUGE_VAL);
    CHECK_FALSE(all_finite(m));
}
