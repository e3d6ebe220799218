#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include "doctest.h"
#include "obwalk/obtuse.hpp"
#include "obwalk/rng.hpp"
#include "test_support.hpp"

using namespace obwalk;

namespace {

std::vector<CVector> golden_dim2_vectors() {
    CVector v1(2), v2(2), v3(2);
    v1 << 1.0, 0.0;
    v2 << -1.0, 1.0;
    v3 << -1.0, -2.0;
    return {v1, v2, v3};
}

}  // namespace

TEST_CASE("golden three-outcome system carries the law (1/2, 1/3, 1/6)") {
    ObtuseSystem s = validate_obtuse(golden_dim2_vectors());
    REQUIRE(s.n == 2);
    CHECK(std::abs(s.probabilities[0] - 0.5) <= 1e-14);
    CHECK(std::abs(s.probabilities[1] - 1.0 / 3.0) <= 1e-14);
    CHECK(std::abs(s.probabilities[2] - 1.0 / 6.0) <= 1e-14);
}

TEST_CASE("validation rejects perturbed and miscounted families") {
    auto vs = golden_dim2_vectors();
    vs[1](0) += 1e-6;
    CHECK_THROWS_AS(validate_obtuse(vs), PreconditionError);

    const std::vector<CVector> all = golden_dim2_vectors();
    const std::vector<CVector> two(all.begin(), all.begin() + 2);
    CHECK_THROWS_AS(validate_obtuse(two), PreconditionError);
}

TEST_CASE("canonical system for a symmetric Bernoulli law") {
    ObtuseSystem s = obtuse_from_probabilities({0.5, 0.5});
    REQUIRE(s.n == 1);
    CHECK(std::abs(s.vectors[0](0) - Complex(1.0, 0.0)) <= 1e-12);
    CHECK(std::abs(s.vectors[1](0) - Complex(-1.0, 0.0)) <= 1e-12);
    CHECK(s.probabilities[0] == 0.5);  // law copied exactly
}

TEST_CASE("canonical system for the rare-event law") {
    const double h = 0.09;
    ObtuseSystem s = obtuse_from_probabilities({1.0 / (1 + h), h / (1 + h)});
    CHECK(std::abs(s.vectors[0](0) - std::sqrt(h)) <= 1e-12);
    CHECK(std::abs(s.vectors[1](0) + 1.0 / std::sqrt(h)) <= 1e-12);
}

TEST_CASE("random laws produce valid systems with the exact input law") {
    Prng prng(101);
    for (int rep = 0; rep < 40; ++rep) {
        int n = 1 + static_cast<int>(prng.next_u64() % 5);
        std::vector<double> p = testing::random_probabilities(prng, n + 1);
        ObtuseSystem s = obtuse_from_probabilities(p);
        for (int i = 0; i <= n; ++i) CHECK(s.probabilities[static_cast<std::size_t>(i)] == p[static_cast<std::size_t>(i)]);
        // Rotations leave the law untouched.
        ObtuseSystem r = apply_unitary(prng.haar_unitary(n), s);
        ObtuseSystem rechecked = validate_obtuse(r.vectors);
        for (int i = 0; i <= n; ++i)
            CHECK(std::abs(rechecked.probabilities[static_cast<std::size_t>(i)] - p[static_cast<std::size_t>(i)]) <= 1e-12);
    }
}

TEST_CASE("random variable wrapper exposes coordinates with a constant 0th") {
    ObtuseRV rv = rv_from_system(validate_obtuse(golden_dim2_vectors()));
    CHECK(rv.outcomes() == 3);
    CHECK(rv.value(0, 0) == Complex(1.0, 0.0));
    CHECK(rv.value(2, 2) == Complex(-2.0, 0.0));
}

TEST_CASE("sampled outcome frequencies follow the canonical law") {
    ObtuseRV rv = rv_from_system(validate_obtuse(golden_dim2_vectors()));
    const int n = 30000;
    std::vector<int> hist(4, 0);
    for (int outcome : sample(rv, 2024, n)) {
        REQUIRE(outcome >= 1);
        REQUIRE(outcome <= 3);
        ++hist[static_cast<std::size_t>(outcome)];
    }
    const double expect[] = {0.5, 1.0 / 3.0, 1.0 / 6.0};
    for (int i = 0; i < 3; ++i) {
        double sigma = std::sqrt(expect[i] * (1 - expect[i]) / n);
        CHECK(std::abs(static_cast<double>(hist[static_cast<std::size_t>(i + 1)]) / n - expect[i]) < 5 * sigma);
    }
    CHECK(sample(rv, 2024, 64) == sample(rv, 2024, 64));
}

TEST_CASE("unitary equivalence recovers the rotation between systems") {
    Prng prng(77);
    ObtuseSystem a = validate_obtuse(golden_dim2_vectors());
    CMatrix r = prng.haar_unitary(2);
    ObtuseSystem b = apply_unitary(r, a);
    std::optional<CMatrix> u = unitary_equivalence(a, b);
    REQUIRE(u.has_value());
    CHECK(distance(*u, r) <= 1e-10);
    for (std::size_t i = 0; i < a.vectors.size(); ++i)
        CHECK((*u * a.vectors[i] - b.vectors[i]).norm() <= 1e-10);
}

TEST_CASE("systems with different laws are not unitarily equivalent") {
    ObtuseSystem a = validate_obtuse(golden_dim2_vectors());
    ObtuseSystem b = obtuse_from_probabilities({0.5, 0.3, 0.2});
    CHECK_FALSE(unitary_equivalence(a, b).has_value());
}

TEST_CASE("obtuse system JSON round-trips bit-exactly") {
    Prng prng(55);
    ObtuseSystem s = testing::random_obtuse_system(prng, 3);
    ObtuseSystem back = obtuse_system_from_json(to_json_string(s));
    REQUIRE(back.n == s.n);
    for (std::size_t i = 0; i < s.vectors.size(); ++i) {
        CHECK(back.probabilities[i] == s.probabilities[i]);
        for (Eigen::Index j = 0; j < s.vectors[i].size(); ++j) {
            CHECK(back.vectors[i](j).real() == s.vectors[i](j).real());
            CHECK(back.vectors[i](j).imag() == s.vectors[i](j).imag());
        }
    }
}
