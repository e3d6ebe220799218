#include "obwalk/channel.hpp"

#include <cmath>

#include "json_detail.hpp"
#include "obwalk/json_io.hpp"
#include "obwalk/rng.hpp"

namespace obwalk {

CMatrix QuantumChannel::apply(const CMatrix& rho) const {
    CMatrix out = CMatrix::Zero(dim, dim);
    for (const CMatrix& l : krauss) out += l * rho * l.adjoint();
    return out;
}

CMatrix QuantumChannel::choi() const {
    const Eigen::Index d2 = dim * dim;
    CMatrix c = CMatrix::Zero(d2, d2);
    for (const CMatrix& l : krauss) {
        CVector vec(d2);
        for (Eigen::Index a = 0; a < dim; ++a)
            for (Eigen::Index b = 0; b < dim; ++b) vec(a * dim + b) = l(a, b);
        c += outer(vec, vec);
    }
    return c;
}

QuantumChannel channel_from_unitary(const CMatrix& u, const CMatrix& omega, Eigen::Index dim_sys,
                                    Eigen::Index dim_env) {
    if (u.rows() != dim_sys * dim_env || u.cols() != u.rows())
        throw PreconditionError("channel_from_unitary: unitary has wrong dimensions");
    if (!is_unitary(u, kStructuralTol))
        throw PreconditionError("channel_from_unitary: u is not unitary");
    if (omega.rows() != dim_env || omega.cols() != dim_env ||
        !is_density_matrix(omega, kStructuralTol))
        throw PreconditionError("channel_from_unitary: omega is not a density matrix");

    Eigen::SelfAdjointEigenSolver<CMatrix> es(omega);
    QuantumChannel ch;
    ch.dim = dim_sys;
    for (Eigen::Index k = 0; k < dim_env; ++k) {
        const double lambda = es.eigenvalues()(k);
        if (lambda < 1e-14) continue;
        const CVector g = es.eigenvectors().col(k);
        for (Eigen::Index i = 0; i < dim_env; ++i) {
            CMatrix l(dim_sys, dim_sys);
            for (Eigen::Index a = 0; a < dim_sys; ++a)
                for (Eigen::Index b = 0; b < dim_sys; ++b) {
                    Complex s = 0.0;
                    for (Eigen::Index m = 0; m < dim_env; ++m)
                        s += u(a * dim_env + i, b * dim_env + m) * g(m);
                    l(a, b) = std::sqrt(lambda) * s;
                }
            ch.krauss.push_back(l);
        }
    }

    CMatrix complete = CMatrix::Zero(dim_sys, dim_sys);
    for (const CMatrix& l : ch.krauss) complete += l.adjoint() * l;
    if ((complete - identity(dim_sys)).norm() > kStructuralTol)
        throw InternalError("channel_from_unitary: Krauss family is not trace preserving");
    return ch;
}

bool channels_equal(const QuantumChannel& a, const QuantumChannel& b, double tol) {
    if (a.dim != b.dim) return false;
    return (a.choi() - b.choi()).norm() <= tol;
}

ClassicalUnitary build_classical_unitary(const std::vector<Branch>& branches) {
    if (branches.size() < 2)
        throw PreconditionError("build_classical_unitary: need at least 2 branches");
    const Eigen::Index de = static_cast<Eigen::Index>(branches.size());
    const Eigen::Index ds = branches[0].u.rows();
    for (std::size_t i = 0; i < branches.size(); ++i) {
        const Branch& br = branches[i];
        if (br.phi.size() != de)
            throw PreconditionError("build_classical_unitary: phi_" + std::to_string(i + 1) +
                                    " must live in C^(branch count)");
        if (br.u.rows() != ds || br.u.cols() != ds)
            throw PreconditionError("build_classical_unitary: branch unitaries must share one dimension");
        if (!is_unitary(br.u, kStructuralTol))
            throw PreconditionError("build_classical_unitary: branch " + std::to_string(i + 1) +
                                    " is not unitary");
        if (std::abs(br.phi(0)) < 1e-12)
            throw PreconditionError(
                "build_classical_unitary: reference-state overlap vanishes; choose different e0 "
                "or reorder basis");
    }
    for (std::size_t i = 0; i < branches.size(); ++i)
        for (std::size_t j = i; j < branches.size(); ++j) {
            const Complex ip = inner(branches[i].phi, branches[j].phi);
            const Complex want = (i == j) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
            if (std::abs(ip - want) > kStructuralTol)
                throw PreconditionError("build_classical_unitary: phis are not orthonormal");
        }

    ClassicalUnitary cu;
    cu.dim_sys = ds;
    cu.dim_env = de;
    cu.branches = branches;
    cu.u_total = CMatrix::Zero(ds * de, ds * de);
    for (const Branch& br : branches)
        cu.u_total += tensor_product(br.u, outer(br.phi, br.phi));
    decompose(cu);
    return cu;
}

void decompose(ClassicalUnitary& cu) {
    const Eigen::Index ds = cu.dim_sys;
    const Eigen::Index de = cu.dim_env;
    const int n = static_cast<int>(de) - 1;

    cu.p.resize(cu.branches.size());
    std::vector<CVector> vecs(cu.branches.size());
    for (std::size_t i = 0; i < cu.branches.size(); ++i) {
        const CVector& phi = cu.branches[i].phi;
        if (std::abs(phi(0)) < 1e-12)
            throw PreconditionError(
                "decompose: reference-state overlap vanishes; choose different e0 or reorder basis");
        cu.p[i] = std::norm(phi(0));
        CVector v(n);
        for (int j = 1; j <= n; ++j) v(j - 1) = std::conj(phi(j)) / std::conj(phi(0));
        vecs[i] = v;
    }
    cu.rv = rv_from_system(validate_obtuse(vecs), 1e-10);
    cu.tensor = tensor_from_rv(cu.rv);

    cu.A = CMatrix::Zero(ds, ds);
    for (std::size_t i = 0; i < cu.branches.size(); ++i) cu.A += cu.p[i] * cu.branches[i].u;
    cu.B.assign(n, CMatrix::Zero(ds, ds));
    for (int j = 0; j < n; ++j)
        for (std::size_t i = 0; i < cu.branches.size(); ++i)
            cu.B[j] += cu.p[i] * std::conj(vecs[i](j)) * cu.branches[i].u;

    // Partial-trace cross-checks: A and B_j are environment blocks of u_total.
    const CMatrix id_sys = identity(ds);
    const CVector e0 = basis_vector(de, 0);
    const CMatrix a_trace =
        partial_trace_env(cu.u_total * tensor_product(id_sys, outer(e0, e0)), ds, de);
    if ((a_trace - cu.A).norm() > 1e-9)
        throw InternalError("decompose: trace formula for A disagrees with the branch sum");
    for (int j = 1; j <= n; ++j) {
        const CMatrix b_trace = partial_trace_env(
            cu.u_total * tensor_product(id_sys, outer(e0, basis_vector(de, j))), ds, de);
        if ((b_trace - cu.B[j - 1]).norm() > 1e-9)
            throw InternalError("decompose: trace formula for B_" + std::to_string(j) +
                                " disagrees with the branch sum");
    }

    // Branch identity: A + sum_j v_i^j B_j recovers each branch unitary.
    for (std::size_t i = 0; i < cu.branches.size(); ++i) {
        CMatrix ui = cu.A;
        for (int j = 0; j < n; ++j) ui += vecs[i](j) * cu.B[j];
        if ((ui - cu.branches[i].u).norm() > 1e-9)
            throw InternalError("decompose: branch identity failed on branch " +
                                std::to_string(i + 1));
    }

    CMatrix recon = tensor_product(cu.A, identity(de));
    for (int j = 1; j <= n; ++j)
        recon += tensor_product(cu.B[j - 1], multiplication_matrix(cu.tensor, j));
    cu.reconstruction_residual = (cu.u_total - recon).norm();
    if (cu.reconstruction_residual > 1e-6)
        throw InternalError("decompose: reconstruction residual " +
                            fmt17(cu.reconstruction_residual) + " signals a convention bug");
}

BasisChangeReport basis_change_invariance_check(const ClassicalUnitary& cu, const CMatrix& r) {
    const int n = static_cast<int>(cu.dim_env) - 1;
    if (r.rows() != n || r.cols() != n)
        throw PreconditionError("basis_change_invariance_check: rotation must act on C^N");
    if (!is_unitary(r, kStructuralTol))
        throw PreconditionError("basis_change_invariance_check: rotation is not unitary");

    CMatrix g = identity(n + 1);
    g.block(1, 1, n, n) = r;

    std::vector<Branch> rotated(cu.branches.size());
    for (std::size_t i = 0; i < cu.branches.size(); ++i)
        rotated[i] = Branch{g.adjoint() * cu.branches[i].phi, cu.branches[i].u};
    ClassicalUnitary cu2 = build_classical_unitary(rotated);

    BasisChangeReport rep;
    rep.a_residual = (cu2.A - cu.A).norm();
    for (int j = 0; j < n; ++j) {
        CMatrix expect = CMatrix::Zero(cu.dim_sys, cu.dim_sys);
        for (int k = 0; k < n; ++k) expect += std::conj(r(k, j)) * cu.B[k];
        rep.b_residual = std::max(rep.b_residual, (cu2.B[j] - expect).norm());
    }
    CMatrix recon2 = tensor_product(cu2.A, identity(n + 1));
    for (int j = 1; j <= n; ++j)
        recon2 += tensor_product(cu2.B[j - 1], multiplication_matrix(cu2.tensor, j));
    const CMatrix gg = tensor_product(identity(cu.dim_sys), g);
    rep.u_residual = (gg * recon2 * gg.adjoint() - cu.u_total).norm();
    return rep;
}

RandomUnitaryActionReport random_unitary_action(const ClassicalUnitary& cu, const CMatrix& rho) {
    if (!is_density_matrix(rho, kStructuralTol))
        throw PreconditionError("random_unitary_action: rho is not a density matrix");
    RandomUnitaryActionReport rep;
    rep.mixture = CMatrix::Zero(cu.dim_sys, cu.dim_sys);
    for (std::size_t i = 0; i < cu.branches.size(); ++i)
        rep.mixture += cu.p[i] * cu.branches[i].u * rho * cu.branches[i].u.adjoint();
    const CVector e0 = basis_vector(cu.dim_env, 0);
    const QuantumChannel ch = channel_from_unitary(cu.u_total, outer(e0, e0), cu.dim_sys, cu.dim_env);
    rep.channel_out = ch.apply(rho);
    rep.max_diff = (rep.mixture - rep.channel_out).cwiseAbs().maxCoeff();
    return rep;
}

std::optional<std::vector<Branch>> is_branch_form(const CMatrix& u, Eigen::Index dim_sys,
                                                  Eigen::Index dim_env, double tol) {
    if (u.rows() != dim_sys * dim_env || u.cols() != u.rows())
        throw PreconditionError("is_branch_form: matrix has wrong dimensions");
    if (!is_unitary(u, kStructuralTol)) return std::nullopt;

    // Environment-side blocks Y_ab(c,d) = U[(a,c),(b,d)].  In branch form they
    // all lie in the span of the projectors |phi_i><phi_i|, so a generic
    // Hermitian combination has the phi_i as eigenvectors.
    std::vector<CMatrix> y(static_cast<std::size_t>(dim_sys * dim_sys));
    for (Eigen::Index a = 0; a < dim_sys; ++a)
        for (Eigen::Index b = 0; b < dim_sys; ++b) {
            CMatrix blk(dim_env, dim_env);
            for (Eigen::Index c = 0; c < dim_env; ++c)
                for (Eigen::Index d = 0; d < dim_env; ++d)
                    blk(c, d) = u(a * dim_env + c, b * dim_env + d);
            y[static_cast<std::size_t>(a * dim_sys + b)] = blk;
        }

    Prng prng(0xb10c5u);
    for (int attempt = 0; attempt < 6; ++attempt) {
        Prng stream = prng.derive(attempt);
        CMatrix h = CMatrix::Zero(dim_env, dim_env);
        for (const CMatrix& blk : y) {
            const Complex c = stream.complex_gaussian();
            h += c * blk + std::conj(c) * blk.adjoint();
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        if (es.info() != Eigen::Success) continue;

        std::vector<Branch> branches(static_cast<std::size_t>(dim_env));
        bool ok = true;
        for (Eigen::Index i = 0; i < dim_env && ok; ++i) {
            const CVector phi = es.eigenvectors().col(i);
            CMatrix ui(dim_sys, dim_sys);
            for (Eigen::Index a = 0; a < dim_sys; ++a)
                for (Eigen::Index b = 0; b < dim_sys; ++b)
                    ui(a, b) = inner(phi, y[static_cast<std::size_t>(a * dim_sys + b)] * phi);
            if (!is_unitary(ui, tol)) ok = false;
            branches[static_cast<std::size_t>(i)] = Branch{phi, ui};
        }
        if (!ok) continue;

        CMatrix rebuilt = CMatrix::Zero(u.rows(), u.cols());
        for (const Branch& br : branches)
            rebuilt += tensor_product(br.u, outer(br.phi, br.phi));
        if ((rebuilt - u).norm() <= tol) return branches;
    }
    return std::nullopt;
}

ClassicalUnitary random_classical_unitary(Eigen::Index dim_sys, Eigen::Index dim_env, Prng& prng) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        const CMatrix basis = prng.haar_unitary(dim_env);
        bool ok = true;
        for (Eigen::Index i = 0; i < dim_env; ++i)
            if (std::abs(basis(0, i)) < 0.05) ok = false;
        if (!ok) continue;
        std::vector<Branch> branches(static_cast<std::size_t>(dim_env));
        for (Eigen::Index i = 0; i < dim_env; ++i)
            branches[static_cast<std::size_t>(i)] = Branch{basis.col(i), prng.haar_unitary(dim_sys)};
        return build_classical_unitary(branches);
    }
    throw InternalError("random_classical_unitary: could not find a well-conditioned basis");
}

std::string to_json_string(const QuantumChannel& c) {
    std::string out = "{\"dim\":" + std::to_string(c.dim) + ",\"krauss\":[";
    for (std::size_t i = 0; i < c.krauss.size(); ++i) {
        if (i != 0) out += ",";
        out += matrix_json(c.krauss[i]);
    }
    return out + "]}";
}

QuantumChannel channel_from_json(const std::string& text) {
    const auto j = detail::parse_json(text, "channel");
    if (!j.is_object() || !j.contains("dim") || !j.contains("krauss"))
        throw InputError("channel: expected {dim, krauss}");
    if (!j["dim"].is_number_integer() || j["dim"].get<Eigen::Index>() < 1)
        throw InputError("channel: dim must be a positive integer");
    QuantumChannel ch;
    ch.dim = j["dim"].get<Eigen::Index>();
    if (!j["krauss"].is_array() || j["krauss"].empty())
        throw InputError("channel: krauss must be a non-empty array");
    for (const auto& e : j["krauss"]) {
        CMatrix l = detail::matrix_from_json(e, "Krauss operator");
        if (l.rows() != ch.dim || l.cols() != ch.dim)
            throw InputError("channel: Krauss operator dimension mismatch");
        ch.krauss.push_back(l);
    }
    CMatrix complete = CMatrix::Zero(ch.dim, ch.dim);
    for (const CMatrix& l : ch.krauss) complete += l.adjoint() * l;
    if ((complete - identity(ch.dim)).norm() > kStructuralTol)
        throw PreconditionError("channel: Krauss family is not trace preserving");
    return ch;
}

std::string to_json_string(const ClassicalUnitary& cu) {
    std::string out = "{\"dim_sys\":" + std::to_string(cu.dim_sys) +
                      ",\"dim_env\":" + std::to_string(cu.dim_env) + ",\"branches\":[";
    for (std::size_t i = 0; i < cu.branches.size(); ++i) {
        if (i != 0) out += ",";
        out += "{\"phi\":" + vector_json(cu.branches[i].phi) +
               ",\"u\":" + matrix_json(cu.branches[i].u) + "}";
    }
    out += "],\"derived\":{\"p\":[";
    for (std::size_t i = 0; i < cu.p.size(); ++i) {
        if (i != 0) out += ",";
        out += fmt17(cu.p[i]);
    }
    out += "],\"obtuse\":" + to_json_string(cu.rv.system) + ",\"A\":" + matrix_json(cu.A) +
           ",\"B\":[";
    for (std::size_t i = 0; i < cu.B.size(); ++i) {
        if (i != 0) out += ",";
        out += matrix_json(cu.B[i]);
    }
    out += "],\"reconstruction_residual\":" + fmt17(cu.reconstruction_residual) + "}}";
    return out;
}

ClassicalUnitary classical_unitary_from_json(const std::string& text) {
    const auto j = detail::parse_json(text, "classical unitary");
    if (!j.is_object() || !j.contains("branches"))
        throw InputError("classical unitary: expected {branches:[{phi,u},...]}");
    const auto& jb = j["branches"];
    if (!jb.is_array() || jb.size() < 2)
        throw InputError("classical unitary: branches must hold at least 2 entries");
    std::vector<Branch> branches;
    branches.reserve(jb.size());
    for (const auto& e : jb) {
        if (!e.is_object() || !e.contains("phi") || !e.contains("u"))
            throw InputError("classical unitary: each branch needs phi and u");
        branches.push_back(Branch{detail::vector_from_json(e["phi"], "branch phi"),
                                  detail::matrix_from_json(e["u"], "branch unitary")});
    }
    return build_classical_unitary(branches);
}

}  // namespace obwalk
