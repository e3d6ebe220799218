#include "obwalk/tensor3.hpp"

#include <algorithm>
#include <cmath>

#include "json_detail.hpp"
#include "obwalk/json_io.hpp"
#include "obwalk/rng.hpp"

namespace obwalk {

double SymmetryReport::worst() const {
    return std::max(std::max(zero_index, upper_pair), std::max(contraction, conj_contraction));
}

std::string SymmetryReport::worst_family() const {
    const double w = worst();
    if (w == zero_index) return "zero_index";
    if (w == upper_pair) return "upper_pair";
    if (w == contraction) return "contraction";
    return "conj_contraction";
}

ThreeTensor tensor_from_rv(const ObtuseRV& rv) {
    const int n = rv.system.n;
    ThreeTensor t = ThreeTensor::zeros(n);
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int k = 0; k <= n; ++k) {
                Complex s = 0.0;
                for (int m = 0; m < rv.outcomes(); ++m)
                    s += rv.system.probabilities[m] * rv.value(m, i) * rv.value(m, j) *
                         std::conj(rv.value(m, k));
                t.at(i, j, k) = s;
            }
    return t;
}

SymmetryReport verify_double_symmetry(const ThreeTensor& t, double) {
    const int n = t.n;
    SymmetryReport r;
    for (int i = 0; i <= n; ++i)
        for (int k = 0; k <= n; ++k) {
            const double delta = (i == k) ? 1.0 : 0.0;
            r.zero_index = std::max(r.zero_index, std::abs(t.at(i, 0, k) - delta));
        }
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int k = 0; k <= n; ++k)
                r.upper_pair = std::max(r.upper_pair, std::abs(t.at(i, j, k) - t.at(j, i, k)));
    for (int j = 0; j <= n; ++j)
        for (int l = 0; l <= n; ++l)
            for (int i = 0; i <= n; ++i)
                for (int k = 0; k <= n; ++k) {
                    Complex a = 0.0, b = 0.0, c = 0.0, d = 0.0;
                    for (int m = 0; m <= n; ++m) {
                        a += t.at(i, m, j) * t.at(k, l, m);
                        b += t.at(k, m, j) * t.at(i, l, m);
                        c += t.at(i, m, j) * std::conj(t.at(l, m, k));
                        d += t.at(k, m, j) * std::conj(t.at(l, m, i));
                    }
                    r.contraction = std::max(r.contraction, std::abs(a - b));
                    r.conj_contraction = std::max(r.conj_contraction, std::abs(c - d));
                }
    return r;
}

ProductReport verify_product_relation(const ThreeTensor& t, const ObtuseRV& rv, double) {
    const int n = t.n;
    if (n != rv.system.n)
        throw PreconditionError("verify_product_relation: tensor and variable dimensions differ");
    ProductReport r;
    for (int m = 0; m < rv.outcomes(); ++m)
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j) {
                Complex plain = 0.0, conj_side = 0.0;
                for (int k = 0; k <= n; ++k) {
                    plain += t.at(i, j, k) * rv.value(m, k);
                    conj_side += std::conj(t.at(i, k, j)) * rv.value(m, k);
                }
                r.plain = std::max(r.plain,
                                   std::abs(rv.value(m, i) * rv.value(m, j) - plain));
                r.conj = std::max(r.conj,
                                  std::abs(std::conj(rv.value(m, i)) * rv.value(m, j) - conj_side));
            }
    return r;
}

CMatrix multiplication_matrix(const ThreeTensor& t, int i) {
    if (i < 0 || i > t.n) throw PreconditionError("multiplication_matrix: index out of range");
    const int d = t.n + 1;
    if (i == 0) return identity(d);
    CMatrix m(d, d);
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) m(k, j) = t.at(i, j, k);
    return m;
}

CMatrix conjugate_multiplication_matrix(const ThreeTensor& t, int i) {
    if (i < 0 || i > t.n)
        throw PreconditionError("conjugate_multiplication_matrix: index out of range");
    const int d = t.n + 1;
    if (i == 0) return identity(d);
    CMatrix m(d, d);
    for (int k = 0; k < d; ++k)
        for (int j = 0; j < d; ++j) m(k, j) = std::conj(t.at(i, k, j));
    return m;
}

ObtuseRV rv_from_tensor(const ThreeTensor& t, double tol) {
    const int n = t.n;
    const int d = n + 1;
    std::vector<CMatrix> mult(n);
    for (int i = 1; i <= n; ++i) mult[i - 1] = multiplication_matrix(t, i);

    // The multiplication matrices of a genuine variable form a commuting normal
    // family; a generic Hermitian combination separates their joint
    // eigenvectors.  Retry with fresh coefficients if a combination is
    // degenerate or the round trip fails.
    Prng prng(0x9c0ffee5ull);
    for (int attempt = 0; attempt < 8; ++attempt) {
        Prng stream = prng.derive(attempt);
        CMatrix h = CMatrix::Zero(d, d);
        for (int i = 0; i < n; ++i) {
            const Complex c = stream.complex_gaussian();
            h += c * mult[i] + std::conj(c) * mult[i].adjoint();
        }
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        if (es.info() != Eigen::Success) continue;

        struct Outcome {
            double p;
            CVector v;
        };
        std::vector<Outcome> outs;
        bool ok = true;
        for (int m = 0; m < d; ++m) {
            const CVector psi = es.eigenvectors().col(m);
            const double p = std::norm(psi(0));
            if (p < 1e-12) {
                ok = false;
                break;
            }
            CVector v(n);
            for (int i = 0; i < n; ++i) v(i) = inner(psi, mult[i] * psi);
            outs.push_back({p, v});
        }
        if (!ok) continue;

        std::sort(outs.begin(), outs.end(), [](const Outcome& a, const Outcome& b) {
            if (std::abs(a.p - b.p) > 1e-12) return a.p > b.p;
            for (Eigen::Index i = 0; i < a.v.size(); ++i) {
                if (std::abs(a.v(i).real() - b.v(i).real()) > 1e-12)
                    return a.v(i).real() < b.v(i).real();
                if (std::abs(a.v(i).imag() - b.v(i).imag()) > 1e-12)
                    return a.v(i).imag() < b.v(i).imag();
            }
            return false;
        });

        std::vector<CVector> vecs(outs.size());
        for (std::size_t i = 0; i < outs.size(); ++i) vecs[i] = outs[i].v;
        try {
            ObtuseRV rv = rv_from_system(validate_obtuse(vecs, std::max(tol, kStructuralTol)),
                                         std::max(tol, kAlgebraicTol));
            ThreeTensor back = tensor_from_rv(rv);
            double resid = 0.0;
            for (std::size_t k = 0; k < t.coeffs.size(); ++k)
                resid = std::max(resid, std::abs(t.coeffs[k] - back.coeffs[k]));
            if (resid <= tol) return rv;
        } catch (const PreconditionError&) {
            // fall through to the next attempt
        }
    }
    throw PreconditionError("rv_from_tensor: tensor does not diagonalize to an obtuse variable");
}

std::string to_json_string(const ThreeTensor& t) {
    std::string out = "{\"n\":" + std::to_string(t.n) + ",\"coeffs\":[";
    bool first = true;
    for (int i = 0; i <= t.n; ++i)
        for (int j = 0; j <= t.n; ++j)
            for (int k = 0; k <= t.n; ++k) {
                const Complex z = t.at(i, j, k);
                if (z == Complex(0.0, 0.0)) continue;
                if (!first) out += ",";
                first = false;
                out += "[" + std::to_string(i) + "," + std::to_string(j) + "," +
                       std::to_string(k) + "," + fmt17(z.real()) + "," + fmt17(z.imag()) + "]";
            }
    return out + "]}";
}

ThreeTensor tensor_from_json(const std::string& text) {
    const auto j = detail::parse_json(text, "tensor");
    if (!j.is_object() || !j.contains("n") || !j.contains("coeffs"))
        throw InputError("tensor: expected {n, coeffs}");
    if (!j["n"].is_number_integer() || j["n"].get<int>() < 1)
        throw InputError("tensor: n must be a positive integer");
    const int n = j["n"].get<int>();
    ThreeTensor t = ThreeTensor::zeros(n);
    if (!j["coeffs"].is_array()) throw InputError("tensor: coeffs must be an array");
    for (const auto& row : j["coeffs"]) {
        if (!row.is_array() || row.size() != 5)
            throw InputError("tensor: each coefficient must be [i,j,k,re,im]");
        for (int q = 0; q < 3; ++q)
            if (!row[q].is_number_integer() || row[q].get<int>() < 0 || row[q].get<int>() > n)
                throw InputError("tensor: coefficient index out of range");
        t.at(row[0].get<int>(), row[1].get<int>(), row[2].get<int>()) =
            Complex(detail::finite_number(row[3], "tensor"),
                    detail::finite_number(row[4], "tensor"));
    }
    return t;
}

}  // namespace obwalk
