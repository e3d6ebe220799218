#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obwalk/numerics.hpp"
#include "obwalk/obtuse.hpp"
#include "obwalk/tensor3.hpp"

namespace obwalk {

class Prng;

struct QuantumChannel {
    Eigen::Index dim = 0;
    std::vector<CMatrix> krauss;

    CMatrix apply(const CMatrix& rho) const;
    // Choi matrix sum_m vec(L_m) vec(L_m)^dag with row-major vec; trace = dim.
    CMatrix choi() const;
};

struct Branch {
    CVector phi;  // environment eigenvector
    CMatrix u;    // system unitary applied on that branch
};

/**
 * Bipartite unitary of the form U = sum_i U_i (x) |phi_i><phi_i| together with
 * the derived canonical data: outcome law p, obtuse variable v, mean operator
 * A, fluctuation operators B_j, and the reconstruction
 *   U = A (x) I + sum_j B_j (x) M_j
 * with M_j the multiplication matrices of the variable's 3-tensor.
 */
struct ClassicalUnitary {
    Eigen::Index dim_sys = 0;
    Eigen::Index dim_env = 0;  // N+1
    std::vector<Branch> branches;

    // Populated by decompose.
    std::vector<double> p;
    ObtuseRV rv;
    ThreeTensor tensor;
    CMatrix A;
    std::vector<CMatrix> B;  // N operators
    CMatrix u_total;
    double reconstruction_residual = 0.0;
};

// Krauss family L_(i,k) = sqrt(lambda_k) (I (x) <e_i|) U (I (x) |g_k>) from the
// environment state omega = sum_k lambda_k |g_k><g_k|.
QuantumChannel channel_from_unitary(const CMatrix& u, const CMatrix& omega, Eigen::Index dim_sys,
                                    Eigen::Index dim_env);

// Choi-matrix equality; equivalent to equality as maps.
bool channels_equal(const QuantumChannel& a, const QuantumChannel& b, double tol);

// Assembles u_total from the branches and populates every derived field.
// Fails if the phis are not orthonormal, a branch is not unitary, or some
// |<e_0,phi_i>| falls below 1e-12.
ClassicalUnitary build_classical_unitary(const std::vector<Branch>& branches);

// Recomputes the derived fields of cu in place: p_i = |<e_0,phi_i>|^2,
// v_i^j = <phi_i|e_j>/<phi_i|e_0>, A = sum p_i U_i, B_j = sum p_i conj(v_i^j) U_i,
// cross-checked against the partial-trace formulas and the reconstruction
// identity (internal-consistency error above 1e-6 residual).
void decompose(ClassicalUnitary& cu);

struct BasisChangeReport {
    double a_residual = 0.0;
    double b_residual = 0.0;
    double u_residual = 0.0;
    bool passes(double tol = 1e-9) const {
        return a_residual <= tol && b_residual <= tol && u_residual <= tol;
    }
};

// Redecomposes in the rotated environment basis {e_0, R e_1, ..., R e_N} and
// checks A is unchanged, B transforms as B~_j = sum_k conj(R_kj) B_k, and the
// reconstructed u_total is the same operator.
BasisChangeReport basis_change_invariance_check(const ClassicalUnitary& cu, const CMatrix& r);

struct RandomUnitaryActionReport {
    CMatrix mixture;      // sum p_i U_i rho U_i^dag
    CMatrix channel_out;  // channel from (u_total, |e_0><e_0|) applied to rho
    double max_diff = 0.0;
    bool passes(double tol = kStructuralTol) const { return max_diff <= tol; }
};

RandomUnitaryActionReport random_unitary_action(const ClassicalUnitary& cu, const CMatrix& rho);

// Heuristic: attempts to block-diagonalize u over the environment factor by
// jointly diagonalizing its environment-side blocks.  Returns the branches on
// success; nullopt means no decomposition was found, not a proof none exists.
std::optional<std::vector<Branch>> is_branch_form(const CMatrix& u, Eigen::Index dim_sys,
                                                  Eigen::Index dim_env, double tol);

// Random instance with Haar branch unitaries and a Haar environment basis,
// resampled until every |phi_i(0)| is bounded away from zero.
ClassicalUnitary random_classical_unitary(Eigen::Index dim_sys, Eigen::Index dim_env, Prng& prng);

std::string to_json_string(const QuantumChannel& c);
QuantumChannel channel_from_json(const std::string& text);

std::string to_json_string(const ClassicalUnitary& cu);
// Accepts {"branches":[{"phi":...,"u":...},...]}; derived fields are always
// recomputed, never trusted from the file.
ClassicalUnitary classical_unitary_from_json(const std::string& text);

}  // namespace obwalk
