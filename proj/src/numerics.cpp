#include "obwalk/numerics.hpp"

#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace obwalk {

bool all_finite(const CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const Complex& z = m(i, j);
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
        }
    return true;
}

CMatrix identity(Eigen::Index d) { return CMatrix::Identity(d, d); }

CVector basis_vector(Eigen::Index d, Eigen::Index k) {
    CVector e = CVector::Zero(d);
    e(k) = 1.0;
    return e;
}

CMatrix outer(const CVector& a, const CVector& b) { return a * b.adjoint(); }

CMatrix tensor_product(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

CVector tensor_product(const CVector& a, const CVector& b) {
    CVector out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

CMatrix partial_trace_env(const CMatrix& m, Eigen::Index dim_sys, Eigen::Index dim_env) {
    if (m.rows() != m.cols() || m.rows() != dim_sys * dim_env)
        throw PreconditionError("partial_trace_env: matrix must be (dim_sys*dim_env)-square");
    CMatrix out = CMatrix::Zero(dim_sys, dim_sys);
    for (Eigen::Index i = 0; i < dim_sys; ++i)
        for (Eigen::Index j = 0; j < dim_sys; ++j) {
            Complex s = 0.0;
            for (Eigen::Index k = 0; k < dim_env; ++k) s += m(i * dim_env + k, j * dim_env + k);
            out(i, j) = s;
        }
    return out;
}

CMatrix matrix_exponential(const CMatrix& m) {
    if (m.rows() != m.cols()) throw PreconditionError("matrix_exponential: matrix must be square");
    return m.exp();
}

bool is_unitary(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    const CMatrix id = identity(m.rows());
    return (m * m.adjoint() - id).norm() <= tol && (m.adjoint() * m - id).norm() <= tol;
}

bool is_density_matrix(const CMatrix& m, double tol) {
    if (m.rows() != m.cols()) return false;
    if ((m - m.adjoint()).norm() > tol) return false;
    if (std::abs(m.trace() - Complex(1.0, 0.0)) > tol) return false;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    return es.eigenvalues().minCoeff() >= -tol;
}

CMatrix principal_sqrt(const CMatrix& m) {
    if (m.rows() != m.cols()) throw PreconditionError("principal_sqrt: matrix must be square");
    return m.sqrt();
}

}  // namespace obwalk
