#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace obwalk {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;

// Input that fails structural parsing or basic sanity (CLI exit code 2).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Mathematical precondition not met by otherwise well-formed data (CLI exit code 3).
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// Consistency failure inside the library itself; signals a convention bug, not bad input.
struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

// Default tolerances: structural checks vs algebraic identities at small dimension.
constexpr double kStructuralTol = 1e-10;
constexpr double kAlgebraicTol = 1e-12;

inline double frobenius(const CMatrix& m) { return m.norm(); }

// Frobenius distance, the operator metric used by every tolerance check.
inline double distance(const CMatrix& a, const CMatrix& b) { return (a - b).norm(); }

bool all_finite(const CMatrix& m);

CMatrix identity(Eigen::Index d);

// k-th canonical basis vector of C^d.
CVector basis_vector(Eigen::Index d, Eigen::Index k);

// |a><b| with the inner product conjugate-linear in the FIRST argument.
CMatrix outer(const CVector& a, const CVector& b);

// <a,b> = sum_k conj(a_k) b_k.
inline Complex inner(const CVector& a, const CVector& b) { return a.dot(b); }

// Kronecker product, system factor first: entry ((i*rows_b + k),(j*cols_b + l)) = a(i,j)*b(k,l).
CMatrix tensor_product(const CMatrix& a, const CMatrix& b);
CVector tensor_product(const CVector& a, const CVector& b);

// Trace over the second (environment) factor of a (dim_sys*dim_env)-square matrix.
CMatrix partial_trace_env(const CMatrix& m, Eigen::Index dim_sys, Eigen::Index dim_env);

// exp(m); unitary to 1e-10 for skew-Hermitian m at desk scale.
CMatrix matrix_exponential(const CMatrix& m);

bool is_unitary(const CMatrix& m, double tol);

bool is_density_matrix(const CMatrix& m, double tol);

// Principal square root (Schur based); sqrt of a symmetric unitary is symmetric unitary.
CMatrix principal_sqrt(const CMatrix& m);

}  // namespace obwalk
