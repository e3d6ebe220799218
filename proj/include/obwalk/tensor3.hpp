#pragma once

#include <string>
#include <vector>

#include "obwalk/numerics.hpp"
#include "obwalk/obtuse.hpp"

namespace obwalk {

/**
 * Third-moment tensor S^{ij}_k = E[X^i X^j conj(X^k)] of an obtuse random
 * variable, indices 0..N with X^0 the constant 1.  Stored dense.
 */
struct ThreeTensor {
    int n = 0;
    std::vector<Complex> coeffs;  // (n+1)^3, index (i*(n+1)+j)*(n+1)+k

    static ThreeTensor zeros(int n) {
        ThreeTensor t;
        t.n = n;
        t.coeffs.assign(static_cast<std::size_t>((n + 1) * (n + 1) * (n + 1)), Complex(0.0, 0.0));
        return t;
    }
    Complex& at(int i, int j, int k) {
        return coeffs[static_cast<std::size_t>((i * (n + 1) + j) * (n + 1) + k)];
    }
    const Complex& at(int i, int j, int k) const {
        return coeffs[static_cast<std::size_t>((i * (n + 1) + j) * (n + 1) + k)];
    }
};

// Worst violation per symmetry family of a doubly symmetric 3-tensor.
struct SymmetryReport {
    double zero_index = 0.0;        // S^{i0}_k vs delta_{ik}
    double upper_pair = 0.0;        // S^{ij}_k vs S^{ji}_k
    double contraction = 0.0;       // sum_m S^{im}_j S^{kl}_m vs (i<->k)
    double conj_contraction = 0.0;  // sum_m S^{im}_j conj(S^{lm}_k) vs (i<->k)

    double worst() const;
    std::string worst_family() const;
    bool passes(double tol) const { return worst() <= tol; }
};

struct ProductReport {
    double plain = 0.0;  // X^i X^j vs sum_k S^{ij}_k X^k, on every outcome
    double conj = 0.0;   // conj(X^i) X^j vs sum_k conj(S^{ik}_j) X^k
    double worst() const { return plain > conj ? plain : conj; }
    bool passes(double tol) const { return worst() <= tol; }
};

// coeffs[i,j,k] = sum_m p_m X^i(m) X^j(m) conj(X^k(m)).
ThreeTensor tensor_from_rv(const ObtuseRV& rv);

SymmetryReport verify_double_symmetry(const ThreeTensor& t, double tol);

ProductReport verify_product_relation(const ThreeTensor& t, const ObtuseRV& rv, double tol);

// Matrix of multiplication by X^i on the chaos basis: entry (k,j) = S^{ij}_k.
// i = 0 returns the identity.
CMatrix multiplication_matrix(const ThreeTensor& t, int i);

// Matrix of multiplication by conj(X^i): entry (k,j) = conj(S^{ik}_j); equals
// the adjoint of multiplication_matrix(t,i).
CMatrix conjugate_multiplication_matrix(const ThreeTensor& t, int i);

// Inverse direction: joint diagonalization of the commuting multiplication
// matrices recovers outcomes and probabilities.  Validated by a round trip
// through tensor_from_rv within tol; outcomes are ordered by decreasing
// probability, ties broken lexicographically on the coordinates.
ObtuseRV rv_from_tensor(const ThreeTensor& t, double tol = 1e-8);

std::string to_json_string(const ThreeTensor& t);
ThreeTensor tensor_from_json(const std::string& text);

}  // namespace obwalk
