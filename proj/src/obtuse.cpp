#include "obwalk/obtuse.hpp"

#include <cmath>

#include "json_detail.hpp"
#include "obwalk/json_io.hpp"
#include "obwalk/rng.hpp"

namespace obwalk {

ObtuseSystem validate_obtuse(const std::vector<CVector>& vectors, double tol) {
    if (vectors.size() < 2) throw PreconditionError("validate_obtuse: need at least 2 vectors");
    const int n = static_cast<int>(vectors.size()) - 1;
    for (int i = 0; i <= n; ++i) {
        if (vectors[i].size() != n)
            throw PreconditionError("validate_obtuse: vector " + std::to_string(i + 1) +
                                    " has dimension " + std::to_string(vectors[i].size()) +
                                    ", expected " + std::to_string(n));
        if (!all_finite(vectors[i]))
            throw PreconditionError("validate_obtuse: vector " + std::to_string(i + 1) +
                                    " has non-finite entries");
    }
    for (int i = 0; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) {
            const Complex ip = inner(vectors[i], vectors[j]);
            if (std::abs(ip + 1.0) > tol)
                throw PreconditionError("validate_obtuse: <v_" + std::to_string(i + 1) + ",v_" +
                                        std::to_string(j + 1) + "> = " + fmt17(ip.real()) + "+" +
                                        fmt17(ip.imag()) + "i, expected -1");
        }

    ObtuseSystem s;
    s.n = n;
    s.vectors = vectors;
    s.probabilities.resize(vectors.size());
    for (int i = 0; i <= n; ++i) s.probabilities[i] = 1.0 / (1.0 + vectors[i].squaredNorm());

    // The three induced identities; failures here mean the input was obtuse
    // only marginally within tol.
    double psum = 0.0;
    CVector vsum = CVector::Zero(n);
    CMatrix cov = CMatrix::Zero(n, n);
    for (int i = 0; i <= n; ++i) {
        psum += s.probabilities[i];
        vsum += s.probabilities[i] * vectors[i];
        cov += s.probabilities[i] * outer(vectors[i], vectors[i]);
    }
    if (std::abs(psum - 1.0) > tol)
        throw PreconditionError("validate_obtuse: probabilities sum to " + fmt17(psum));
    if (vsum.norm() > tol)
        throw PreconditionError("validate_obtuse: weighted vector sum is not zero");
    if ((cov - identity(n)).norm() > tol)
        throw PreconditionError("validate_obtuse: weighted projector sum is not the identity");
    return s;
}

ObtuseSystem obtuse_from_probabilities(const std::vector<double>& p) {
    if (p.size() < 2) throw PreconditionError("obtuse_from_probabilities: need at least 2 probabilities");
    const int n = static_cast<int>(p.size()) - 1;
    double sum = 0.0;
    for (double pi : p) {
        if (!(pi > 0.0))
            throw PreconditionError("obtuse_from_probabilities: probabilities must be positive");
        sum += pi;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw PreconditionError("obtuse_from_probabilities: probabilities sum to " + fmt17(sum));

    // Build an orthonormal set of rows starting from (sqrt(p_i))_i, then read
    // the unit columns e_i = sqrt(p_i) (1; v_i).
    const int d = n + 1;
    CMatrix rows(d, d);
    for (int c = 0; c < d; ++c) rows(0, c) = std::sqrt(p[c]);
    for (int r = 1; r < d; ++r) {
        CVector w = CVector::Zero(d);
        w(r) = 1.0;
        for (int b = 0; b < r; ++b) {
            CVector prev = rows.row(b).transpose();
            w -= inner(prev, w) * prev;
        }
        const double nrm = w.norm();
        if (nrm < 1e-14)
            throw InternalError("obtuse_from_probabilities: Gram-Schmidt breakdown");
        rows.row(r) = (w / nrm).transpose();
    }

    std::vector<CVector> vecs(d);
    for (int i = 0; i < d; ++i) {
        CVector v(n);
        for (int j = 1; j < d; ++j) v(j - 1) = rows(j, i) / rows(0, i);
        vecs[i] = v;
    }
    // Coordinate phases: make the first outcome that uses each coordinate
    // real-positive there, giving a deterministic canonical representative.
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < d; ++i) {
            const double a = std::abs(vecs[i](j));
            if (a > 1e-9) {
                const Complex phase = std::conj(vecs[i](j)) / a;
                for (int m = 0; m < d; ++m) vecs[m](j) *= phase;
                break;
            }
        }
    }

    ObtuseSystem s = validate_obtuse(vecs);
    s.probabilities = p;  // exact copy; the computed values agree to rounding
    return s;
}

ObtuseRV rv_from_system(const ObtuseSystem& s, double tol) {
    CVector mean = CVector::Zero(s.n);
    CMatrix second = CMatrix::Zero(s.n, s.n);
    for (int m = 0; m < s.outcomes(); ++m) {
        mean += s.probabilities[m] * s.vectors[m];
        second += s.probabilities[m] * outer(s.vectors[m], s.vectors[m]);
    }
    if (mean.norm() > tol)
        throw PreconditionError("rv_from_system: coordinates are not centered");
    if ((second - identity(s.n)).norm() > tol * s.outcomes() * 10)
        throw PreconditionError("rv_from_system: coordinates are not normalized");
    return ObtuseRV{s};
}

std::vector<int> sample(const ObtuseRV& rv, std::uint64_t rng_seed, int count) {
    if (count < 1) throw PreconditionError("sample: count must be >= 1");
    Prng prng(rng_seed);
    std::vector<int> out(count);
    for (int k = 0; k < count; ++k) out[k] = prng.categorical(rv.system.probabilities) + 1;
    return out;
}

ObtuseSystem apply_unitary(const CMatrix& r, const ObtuseSystem& s) {
    if (r.rows() != s.n || r.cols() != s.n)
        throw PreconditionError("apply_unitary: rotation has wrong dimension");
    std::vector<CVector> vecs(s.vectors.size());
    for (std::size_t i = 0; i < s.vectors.size(); ++i) vecs[i] = r * s.vectors[i];
    ObtuseSystem out = validate_obtuse(vecs);
    out.probabilities = s.probabilities;
    return out;
}

std::optional<CMatrix> unitary_equivalence(const ObtuseSystem& a, const ObtuseSystem& b) {
    if (a.n != b.n) throw PreconditionError("unitary_equivalence: dimension mismatch");
    for (int i = 0; i < a.outcomes(); ++i)
        if (std::abs(a.probabilities[i] - b.probabilities[i]) > kStructuralTol)
            return std::nullopt;
    // sum_i p_i |b_i><a_i| maps a_j to b_j: the cross terms cancel through the
    // obtuse identities, so this closed form is the witness.
    CMatrix u = CMatrix::Zero(a.n, a.n);
    for (int i = 0; i < a.outcomes(); ++i)
        u += a.probabilities[i] * outer(b.vectors[i], a.vectors[i]);
    if (!is_unitary(u, kStructuralTol))
        throw PreconditionError("unitary_equivalence: witness is not unitary; inputs are not both obtuse");
    for (int i = 0; i < a.outcomes(); ++i)
        if ((u * a.vectors[i] - b.vectors[i]).norm() > 1e-9 * (1.0 + b.vectors[i].norm()))
            throw PreconditionError("unitary_equivalence: witness does not map the systems");
    return u;
}

std::string to_json_string(const ObtuseSystem& s) {
    std::string out = "{\"dim\":" + std::to_string(s.n) + ",\"vectors\":[";
    for (int i = 0; i < s.outcomes(); ++i) {
        if (i != 0) out += ",";
        out += vector_json(s.vectors[i]);
    }
    out += "],\"probabilities\":[";
    for (int i = 0; i < s.outcomes(); ++i) {
        if (i != 0) out += ",";
        out += fmt17(s.probabilities[i]);
    }
    return out + "]}";
}

ObtuseSystem obtuse_system_from_json(const std::string& text) {
    const auto j = detail::parse_json(text, "obtuse system");
    if (!j.is_object() || !j.contains("dim") || !j.contains("vectors"))
        throw InputError("obtuse system: expected {dim, vectors[, probabilities]}");
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1)
        throw InputError("obtuse system: dim must be a positive integer");
    const int n = j["dim"].get<int>();
    const auto& jv = j["vectors"];
    if (!jv.is_array() || static_cast<int>(jv.size()) != n + 1)
        throw InputError("obtuse system: vectors must hold dim+1 entries");
    std::vector<CVector> vecs;
    vecs.reserve(jv.size());
    for (const auto& e : jv) vecs.push_back(detail::vector_from_json(e, "obtuse system vector"));
    ObtuseSystem s = validate_obtuse(vecs);
    // Stored probabilities are derived data: cross-check them, then adopt the
    // stored values so a write/read cycle preserves the law bit-exactly.
    if (j.contains("probabilities")) {
        const auto& jp = j["probabilities"];
        if (!jp.is_array() || static_cast<int>(jp.size()) != n + 1)
            throw InputError("obtuse system: probabilities must hold dim+1 entries");
        for (int i = 0; i <= n; ++i) {
            const double p = detail::finite_number(jp[static_cast<std::size_t>(i)],
                                                   "obtuse system probability");
            if (std::abs(p - s.probabilities[static_cast<std::size_t>(i)]) > 1e-12)
                throw InputError("obtuse system: probabilities do not match the vectors");
            s.probabilities[static_cast<std::size_t>(i)] = p;
        }
    }
    return s;
}

}  // namespace obwalk
