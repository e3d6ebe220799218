#include <cmath>
#include <vector>

#include "doctest.h"
#include "obwalk/numerics.hpp"
#include "obwalk/rng.hpp"

using namespace obwalk;

TEST_CASE("streams are pure functions of (seed, substream)") {
    Prng a(42), b(42), c(43);
    for (int k = 0; k < 16; ++k) {
        std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
    }
    bool any_diff = false;
    Prng a2(42);
    for (int k = 0; k < 16; ++k) any_diff |= (a2.next_u64() != c.next_u64());
    CHECK(any_diff);

    Prng p(7);
    Prng d1 = p.derive(1), d1_again = p.derive(1), d2 = p.derive(2);
    CHECK(d1.next_u64() == d1_again.next_u64());
    CHECK(d1.next_u64() != d2.next_u64());
}

TEST_CASE("uniform lies in [0,1) and uniform_pos in (0,1]") {
    Prng p(1);
    for (int k = 0; k < 10000; ++k) {
        double u = p.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        double v = p.uniform_pos();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("gaussian moments match the standard normal") {
    Prng p(5);
    const int n = 200000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    for (int k = 0; k < n; ++k) {
        double g = p.gaussian();
        s += g;
        s2 += g * g;
        s4 += g * g * g * g;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(s4 / n - 3.0) < 0.1);
}

TEST_CASE("exponential has the requested rate") {
    Prng p(9);
    const int n = 100000;
    double s = 0.0;
    for (int k = 0; k < n; ++k) s += p.exponential(4.0);
    CHECK(std::abs(s / n - 0.25) < 0.005);
}

TEST_CASE("categorical frequencies match the law") {
    Prng p(11);
    std::vector<double> law = {0.5, 0.3, 0.2};
    std::vector<int> counts(3, 0);
    const int n = 100000;
    for (int k = 0; k < n; ++k) ++counts[static_cast<std::size_t>(p.categorical(law))];
    for (std::size_t i = 0; i < 3; ++i) {
        double freq = static_cast<double>(counts[i]) / n;
        double sigma = std::sqrt(law[i] * (1 - law[i]) / n);
        CHECK(std::abs(freq - law[i]) < 5 * sigma);
    }
}

TEST_CASE("haar_unitary returns a unitary") {
    Prng p(13);
    for (Eigen::Index d = 1; d <= 5; ++d) {
        CMatrix u = p.haar_unitary(d);
        CHECK(is_unitary(u, 1e-12));
    }
}

TEST_CASE("compensated sum survives catastrophic cancellation") {
    CompensatedSum s;
    s.add(1.0);
    s.add(1e16);
    s.add(-1e16);
    CHECK(s.value() == 1.0);

    // Many small terms against a large one: plain summation loses them.
    CompensatedSum t;
    t.add(1e16);
    for (int k = 0; k < 4096; ++k) t.add(1.0);
    t.add(-1e16);
    CHECK(t.value() == doctest::Approx(4096.0).epsilon(1e-12));
}
