#include <cmath>
#include <optional>
#include <vector>

#include "doctest.h"
#include "obwalk/channel.hpp"
#include "obwalk/presets.hpp"
#include "obwalk/rng.hpp"
#include "test_support.hpp"

using namespace obwalk;

namespace {

// Kraus completeness: sum_m L_m^dag L_m = I.
double completeness_residual(const QuantumChannel& c) {
    CMatrix acc = CMatrix::Zero(c.dim, c.dim);
    for (const CMatrix& l : c.krauss) acc += l.adjoint() * l;
    return distance(acc, CMatrix::Identity(c.dim, c.dim));
}

}  // namespace

TEST_CASE("unitary coupling to a ground state yields a valid channel") {
    Prng prng(5150);
    const Eigen::Index ds = 2, de = 3;
    CMatrix u = prng.haar_unitary(ds * de);
    CMatrix omega = CMatrix::Zero(de, de);
    omega(0, 0) = 1.0;
    QuantumChannel c = channel_from_unitary(u, omega, ds, de);
    CHECK(completeness_residual(c) <= 1e-12);

    CMatrix rho = testing::random_density(prng, ds);
    CMatrix out = c.apply(rho);
    CHECK(is_density_matrix(out, 1e-10));
    // Direct dilation oracle: Tr_env(U (rho ox omega) U^dag).
    CMatrix dil = partial_trace_env(u * tensor_product(rho, omega) * u.adjoint(), ds, de);
    CHECK(distance(out, dil) <= 1e-12);

    CMatrix choi = c.choi();
    CHECK(std::abs(choi.trace().real() - static_cast<double>(ds)) <= 1e-10);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(choi);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("mixing a Kraus list by a unitary preserves the channel") {
    Prng prng(6021);
    const Eigen::Index d = 2;
    std::vector<double> p = {0.5, 0.3, 0.2};
    std::vector<CMatrix> ls;
    for (double w : p) ls.push_back(std::sqrt(w) * prng.haar_unitary(d));
    QuantumChannel a{d, ls};

    CMatrix r = prng.haar_unitary(3);
    std::vector<CMatrix> mixed(3, CMatrix::Zero(d, d));
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i)
            mixed[static_cast<std::size_t>(k)] += r(k, i) * ls[static_cast<std::size_t>(i)];
    QuantumChannel b{d, mixed};

    CHECK(channels_equal(a, b, 1e-10));
    mixed[0] += 1e-3 * CMatrix::Identity(d, d);
    QuantumChannel c{d, mixed};
    CHECK_FALSE(channels_equal(a, c, 1e-10));
}

TEST_CASE("branch decomposition reproduces the mean and fluctuation operators") {
    ClassicalUnitary cu = unitary_preset("dim2-example");
    REQUIRE(cu.branches.size() == 2);
    CHECK(cu.reconstruction_residual <= 1e-9);

    double psum = 0.0;
    for (double w : cu.p) psum += w;
    CHECK(std::abs(psum - 1.0) <= 1e-12);

    CMatrix a = CMatrix::Zero(cu.dim_sys, cu.dim_sys);
    for (std::size_t i = 0; i < cu.branches.size(); ++i)
        a += cu.p[i] * cu.branches[i].u;
    CHECK(distance(a, cu.A) <= 1e-12);

    // B_j = sum_i p_i conj(v_i^j) U_i with v the decoded coordinate values.
    for (int j = 1; j <= cu.rv.system.n; ++j) {
        CMatrix b = CMatrix::Zero(cu.dim_sys, cu.dim_sys);
        for (std::size_t i = 0; i < cu.branches.size(); ++i)
            b += cu.p[i] * std::conj(cu.rv.value(static_cast<int>(i), j)) * cu.branches[i].u;
        CHECK(distance(b, cu.B[static_cast<std::size_t>(j - 1)]) <= 1e-12);
    }
}

TEST_CASE("random instances reconstruct and survive basis changes") {
    Prng prng(7770);
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::Index ds = 1 + static_cast<Eigen::Index>(prng.next_u64() % 3);
        Eigen::Index de = 2 + static_cast<Eigen::Index>(prng.next_u64() % 3);
        ClassicalUnitary cu = random_classical_unitary(ds, de, prng);
        CHECK(cu.reconstruction_residual <= 1e-9);
        CHECK(is_unitary(cu.u_total, 1e-9));

        CMatrix r = prng.haar_unitary(de - 1);
        BasisChangeReport rep2 = basis_change_invariance_check(cu, r);
        INFO("a=" << rep2.a_residual << " b=" << rep2.b_residual << " u=" << rep2.u_residual);
        CHECK(rep2.passes(1e-9));
    }
}

TEST_CASE("the induced channel is the branch mixture of unitary conjugations") {
    Prng prng(8888);
    ClassicalUnitary cu = random_classical_unitary(3, 3, prng);
    CMatrix rho = testing::random_density(prng, 3);
    RandomUnitaryActionReport rep = random_unitary_action(cu, rho);
    CHECK(rep.max_diff <= 1e-10);
    CHECK(rep.passes());
    CHECK(distance(rep.mixture, rep.channel_out) <= 1e-10);
}

TEST_CASE("branch form is detected exactly when present") {
    Prng prng(9009);
    ClassicalUnitary cu = random_classical_unitary(2, 3, prng);
    std::optional<std::vector<Branch>> found = is_branch_form(cu.u_total, 2, 3, 1e-9);
    REQUIRE(found.has_value());
    ClassicalUnitary rebuilt = build_classical_unitary(*found);
    CHECK(distance(rebuilt.u_total, cu.u_total) <= 1e-8);

    // A generic bipartite unitary admits no such decomposition.
    CMatrix generic = prng.haar_unitary(6);
    CHECK_FALSE(is_branch_form(generic, 2, 3, 1e-9).has_value());
}

TEST_CASE("vanishing reference overlap is rejected with a clear message") {
    CMatrix u = CMatrix::Identity(2, 2);
    CVector phi1(2), phi2(2);
    phi1 << 0.0, 1.0;
    phi2 << 1.0, 0.0;
    CHECK_THROWS_AS(build_classical_unitary({Branch{phi1, u}, Branch{phi2, u}}),
                    PreconditionError);
}

TEST_CASE("classical unitary JSON round-trips through the branch list") {
    Prng prng(1234);
    ClassicalUnitary cu = random_classical_unitary(2, 4, prng);
    ClassicalUnitary back = classical_unitary_from_json(to_json_string(cu));
    CHECK(distance(back.u_total, cu.u_total) <= 1e-12);
    CHECK(distance(back.A, cu.A) <= 1e-12);
    REQUIRE(back.B.size() == cu.B.size());
    for (std::size_t j = 0; j < cu.B.size(); ++j)
        CHECK(distance(back.B[j], cu.B[j]) <= 1e-12);
    CHECK(back.reconstruction_residual <= 1e-9);
}

TEST_CASE("ground-state channels of equal instances compare equal") {
    ClassicalUnitary a = unitary_preset("dim2-example");
    // Same branches listed in the opposite order: same operator, same channel.
    std::vector<Branch> rev(a.branches.rbegin(), a.branches.rend());
    ClassicalUnitary b = build_classical_unitary(rev);
    CMatrix omega = CMatrix::Zero(a.dim_env, a.dim_env);
    omega(0, 0) = 1.0;
    QuantumChannel ca = channel_from_unitary(a.u_total, omega, a.dim_sys, a.dim_env);
    QuantumChannel cb = channel_from_unitary(b.u_total, omega, b.dim_sys, b.dim_env);
    CHECK(channels_equal(ca, cb, 1e-10));
}
