#pragma once

#include <optional>
#include <string>
#include <vector>

#include "obwalk/numerics.hpp"

namespace obwalk {

/**
 * N+1 vectors in C^N with pairwise inner products -1, plus the probability law
 * they induce: p_i = 1/(1+|v_i|^2).  Valid systems always satisfy
 *   sum p_i = 1,   sum p_i v_i = 0,   sum p_i |v_i><v_i| = I.
 * Outcome indices are 0-based in code and 1-based in all CLI I/O.
 */
struct ObtuseSystem {
    int n = 0;  // ambient dimension N
    std::vector<CVector> vectors;
    std::vector<double> probabilities;

    int outcomes() const { return n + 1; }
};

// Random vector X with P(X = v_i) = p_i; coordinate 0 is the constant 1.
struct ObtuseRV {
    ObtuseSystem system;

    // X^i evaluated on outcome m (0-based); i = 0..N.
    Complex value(int outcome, int i) const {
        return i == 0 ? Complex(1.0, 0.0) : system.vectors[outcome](i - 1);
    }
    int outcomes() const { return system.outcomes(); }
};

// Checks the pairwise inner products and the three sum identities, then
// attaches probabilities.  Throws PreconditionError naming the first offending
// pair or identity.
ObtuseSystem validate_obtuse(const std::vector<CVector>& vectors, double tol = kStructuralTol);

// Canonical representative of the unitary equivalence class with law p:
// Gram-Schmidt completion of the row (sqrt(p_i))_i, coordinate phases fixed so
// the first use of each coordinate is real-positive.  Probabilities are copied
// from the input exactly.
ObtuseSystem obtuse_from_probabilities(const std::vector<double>& p);

// Wraps a system as a random variable after checking the centering and
// normalization moments by exact finite sums.
ObtuseRV rv_from_system(const ObtuseSystem& s, double tol = kAlgebraicTol);

// count i.i.d. outcome indices in {1..N+1}; pure function of (seed, count).
std::vector<int> sample(const ObtuseRV& rv, std::uint64_t rng_seed, int count);

// v_i -> R v_i for unitary R; probabilities are preserved.
ObtuseSystem apply_unitary(const CMatrix& r, const ObtuseSystem& s);

// The unitary with U a.vectors[i] = b.vectors[i] for all i, or nullopt when the
// probability vectors differ (indices must already align).
std::optional<CMatrix> unitary_equivalence(const ObtuseSystem& a, const ObtuseSystem& b);

std::string to_json_string(const ObtuseSystem& s);
ObtuseSystem obtuse_system_from_json(const std::string& text);

}  // namespace obwalk
