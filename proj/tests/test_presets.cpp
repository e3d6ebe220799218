#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "obwalk/limit.hpp"
#include "obwalk/presets.hpp"

using namespace obwalk;

namespace {

// Per-source jump coefficient sum_j b_tilde[j] mixing(j,c) / sqrt(lambda_c).
CMatrix jump_coefficient(const SDEModel& m, int source) {
    const Eigen::Index d = m.a_tilde.rows();
    CMatrix acc = CMatrix::Zero(d, d);
    for (int j = 0; j < m.n(); ++j)
        acc += m.b_tilde[static_cast<std::size_t>(j)] *
               m.driver.mixing(j, source) /
               std::sqrt(m.driver.intensities[static_cast<std::size_t>(source)]);
    return acc;
}

}  // namespace

TEST_CASE("preset registry is consistent") {
    std::vector<std::string> names = family_preset_names();
    REQUIRE(names.size() == 5);
    for (const std::string& name : names) {
        CHECK(is_family_preset(name));
        HFamily fam = family_preset(name);
        CHECK(fam.name == name);
        CHECK(fam.has_model);
    }
    CHECK_FALSE(is_family_preset("dim2-example"));
    CHECK_THROWS_AS(family_preset("no-such-family"), InputError);
    CHECK_THROWS_AS(unitary_preset("no-such-preset"), InputError);
    PresetOptions bad;
    bad.p = 0.0;
    CHECK_THROWS_AS(family_preset("dim2-diffusive", bad), InputError);
    bad.p = 0.5;
    bad.h = -1.0;
    CHECK_THROWS_AS(unitary_preset("dim2-poisson", bad), InputError);
}

TEST_CASE("families build valid instances across step sizes") {
    for (const std::string& name : family_preset_names()) {
        HFamily fam = family_preset(name);
        for (double h : {0.05, 0.01, 0.002}) {
            ClassicalUnitary cu = fam.builder(h);
            INFO(name << " at h=" << h);
            CHECK(cu.reconstruction_residual <= 1e-9);
            CHECK(is_unitary(cu.u_total, 1e-9));
            double psum = 0.0;
            for (double w : cu.p) psum += w;
            CHECK(std::abs(psum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("pure-diffusion limits preserve unitarity to first order") {
    for (const std::string name : {"dim2-diffusive", "dim3-brownian2"}) {
        SDEModel m = family_preset(name).model;
        CMatrix acc = m.a_tilde + m.a_tilde.adjoint();
        for (const CMatrix& b : m.b_tilde) acc += b.adjoint() * b;
        INFO(name);
        CHECK(acc.norm() <= 1e-12);
    }
}

TEST_CASE("jump limits move by unitary factors") {
    for (const std::string name : {"dim2-poisson", "physical-1d", "dim3-mixed"}) {
        SDEModel m = family_preset(name).model;
        REQUIRE(m.driver.n_poisson == 1);
        CMatrix j = CMatrix::Identity(2, 2) + jump_coefficient(m, 0);
        INFO(name);
        CHECK(is_unitary(j, 1e-12));
    }
}

TEST_CASE("the drift operator is the small-step limit of (A(h) - I)/h") {
    for (const std::string& name : family_preset_names()) {
        HFamily fam = family_preset(name);
        auto err = [&](double h) {
            ClassicalUnitary cu = fam.builder(h);
            return distance((cu.A - CMatrix::Identity(2, 2)) / h,
                            fam.model.a_tilde);
        };
        const double coarse = err(1e-2), fine = err(1e-6);
        INFO(name << ": coarse=" << coarse << " fine=" << fine);
        CHECK(fine <= 0.05);
        CHECK(fine <= 0.5 * coarse);
    }
}

TEST_CASE("the noise operators are the small-step limits of B_j(h)/sqrt(h)") {
    for (const std::string& name : family_preset_names()) {
        HFamily fam = family_preset(name);
        auto err = [&](double h) {
            ClassicalUnitary cu = fam.builder(h);
            double worst = 0.0;
            for (std::size_t j = 0; j < fam.model.b_tilde.size(); ++j)
                worst = std::max(worst, distance(cu.B[j] / std::sqrt(h),
                                                 fam.model.b_tilde[j]));
            return worst;
        };
        const double coarse = err(1e-2), fine = err(1e-6);
        INFO(name << ": coarse=" << coarse << " fine=" << fine);
        CHECK(fine <= 0.05);
        CHECK(fine <= 0.5 * coarse);
    }
}

TEST_CASE("powers of the mean operator approach the drift semigroup") {
    PresetOptions opt;
    opt.p = 0.35;
    opt.tau = 0.2;
    HFamily fam = family_preset("dim2-diffusive", opt);
    CMatrix target = matrix_exponential(fam.model.a_tilde);
    auto err = [&](double h) {
        ClassicalUnitary cu = fam.builder(h);
        const int n = static_cast<int>(std::lround(1.0 / h));
        CMatrix power = CMatrix::Identity(2, 2);
        for (int k = 0; k < n; ++k) power = cu.A * power;
        return distance(power, target);
    };
    CHECK(err(1e-3) <= 0.01);
    CHECK(err(1e-3) <= 0.5 * err(1e-1));
}

TEST_CASE("family JSON loader honors parameter overrides") {
    HFamily fam = family_from_json(
        "{\"preset\": \"dim2-diffusive\", \"p\": 0.3, \"tau\": 0.7}");
    PresetOptions opt;
    opt.p = 0.3;
    opt.tau = 0.7;
    HFamily direct = family_preset("dim2-diffusive", opt);
    CHECK(distance(fam.builder(0.01).u_total, direct.builder(0.01).u_total) == 0.0);
    CHECK(distance(fam.model.a_tilde, direct.model.a_tilde) == 0.0);
    CHECK_THROWS_AS(family_from_json("{\"p\": 0.3}"), InputError);
    CHECK_THROWS_AS(family_from_json("not json"), InputError);
}
