#include "obwalk/rng.hpp"

#include <cmath>

namespace obwalk {

double Prng::gaussian() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Prng::exponential(double rate) { return -std::log(uniform_pos()) / rate; }

int Prng::categorical(const std::vector<double>& p) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size()) - 1;  // guards against acc rounding below 1
}

CMatrix Prng::haar_unitary(Eigen::Index d) {
    CMatrix g(d, d);
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) g(i, j) = complex_gaussian();
    Eigen::HouseholderQR<CMatrix> qr(g);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the diagonal phases of R so the distribution is exactly Haar.
    for (Eigen::Index j = 0; j < d; ++j) {
        Complex rd = r(j, j);
        double a = std::abs(rd);
        q.col(j) *= (a > 0.0) ? rd / a : Complex(1.0, 0.0);
    }
    return q;
}

}  // namespace obwalk
