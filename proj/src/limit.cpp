#include "obwalk/limit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json_detail.hpp"
#include "obwalk/json_io.hpp"
#include "obwalk/parallel.hpp"
#include "obwalk/rng.hpp"
#include "obwalk/walk.hpp"

namespace obwalk {

namespace {

struct Extrapolated {
    Complex value{0, 0};
    double err = 0.0;
    bool flagged = false;
};

// Neville tableau in x = sqrt(h), evaluated at x = 0. The error estimate is
// the last correction; if it grew when the finest probe was added, the
// sequence shows no convergence and the entry is flagged.
Extrapolated neville_at_zero(const std::vector<double>& xs,
                             const std::vector<Complex>& ys) {
    const std::size_t m = xs.size();
    std::vector<std::vector<Complex>> t(m);
    std::vector<double> diag_err(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        t[i].resize(i + 1);
        t[i][0] = ys[i];
        for (std::size_t r = 1; r <= i; ++r)
            t[i][r] = (xs[i] * t[i - 1][r - 1] - xs[i - r] * t[i][r - 1]) /
                      (xs[i] - xs[i - r]);
        if (i >= 1) diag_err[i] = std::abs(t[i][i] - t[i][i - 1]);
    }
    Extrapolated out;
    out.value = t[m - 1][m - 1];
    out.err = diag_err[m - 1];
    out.flagged =
        m >= 3 && diag_err[m - 1] > diag_err[m - 2] && diag_err[m - 1] > 1e-10;
    return out;
}

std::string entry_label(int k, int i, int j) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "M%d[%d][%d]", k, i + 1, j + 1);
    return buf;
}

double jump_size(const DriverSpec& d, int col) {
    // 1/sqrt(lambda) for Poisson columns, 0 for Brownian ones.
    return col < d.n_poisson
               ? 1.0 / std::sqrt(d.intensities[static_cast<std::size_t>(col)])
               : 0.0;
}

void check_driver_shape(const DriverSpec& d, int n) {
    if (d.n_poisson < 0 || d.n_brownian < 0 || d.sources() == 0)
        throw PreconditionError("driver needs at least one source");
    if (static_cast<int>(d.intensities.size()) != d.n_poisson)
        throw PreconditionError("driver intensity count mismatch");
    for (double lam : d.intensities)
        if (!(lam > 0.0) || !std::isfinite(lam))
            throw PreconditionError("Poisson intensities must be positive");
    if (d.mixing.rows() != n || d.mixing.cols() != d.sources())
        throw PreconditionError("driver mixing matrix has wrong shape");
}

// Predicted brackets for one path, evaluated at its terminal Z.
CMatrix bracket_rhs_plain(const LimitTensors& m, double t, const CVector& z) {
    CMatrix rhs = m.m0 * t;
    for (int k = 0; k < m.n; ++k)
        rhs += m.mk[static_cast<std::size_t>(k)] * z(k);
    return rhs;
}

CMatrix bracket_rhs_conj(const LimitTensors& m, double t, const CVector& z) {
    CMatrix rhs = CMatrix::Identity(m.n, m.n) * t;
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j)
            for (int k = 0; k < m.n; ++k)
                rhs(i, j) +=
                    std::conj(m.mk[static_cast<std::size_t>(j)](i, k)) * z(k);
    return rhs;
}

CMatrix probe_matrix(int d) {
    CMatrix probe = CMatrix::Zero(d, d);
    for (int i = 0; i < d; ++i)
        probe(i, i) = static_cast<double>(i + 1) / static_cast<double>(d);
    return probe;
}

struct StatsAcc {
    CMatrix sum;
    RMatrix sq_re, sq_im;
    CompensatedSum probe_sum, probe_sq;

    void init(int d) {
        sum = CMatrix::Zero(d, d);
        sq_re = RMatrix::Zero(d, d);
        sq_im = RMatrix::Zero(d, d);
    }
    void add(const CMatrix& v, const CMatrix& probe) {
        sum += v;
        sq_re += v.real().cwiseProduct(v.real());
        sq_im += v.imag().cwiseProduct(v.imag());
        const double f = (v.adjoint() * probe * v).trace().real();
        probe_sum.add(f);
        probe_sq.add(f * f);
    }
};

TerminalStats finalize_stats(std::vector<StatsAcc>& blocks, int d,
                             int trials) {
    CMatrix sum = CMatrix::Zero(d, d);
    RMatrix sq_re = RMatrix::Zero(d, d);
    RMatrix sq_im = RMatrix::Zero(d, d);
    CompensatedSum probe_sum, probe_sq;
    for (const auto& b : blocks) {
        sum += b.sum;
        sq_re += b.sq_re;
        sq_im += b.sq_im;
        probe_sum.add(b.probe_sum.value());
        probe_sq.add(b.probe_sq.value());
    }
    TerminalStats out;
    out.trials = trials;
    const double nt = static_cast<double>(trials);
    out.mean = sum / nt;
    out.stderr_re = RMatrix::Zero(d, d);
    out.stderr_im = RMatrix::Zero(d, d);
    out.probe_mean = probe_sum.value() / nt;
    if (trials > 1) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double mr = out.mean(i, j).real();
                const double mi = out.mean(i, j).imag();
                double vr = (sq_re(i, j) - nt * mr * mr) / (nt - 1.0);
                double vi = (sq_im(i, j) - nt * mi * mi) / (nt - 1.0);
                out.stderr_re(i, j) = std::sqrt(std::max(vr, 0.0) / nt);
                out.stderr_im(i, j) = std::sqrt(std::max(vi, 0.0) / nt);
            }
        double vp = (probe_sq.value() - nt * out.probe_mean * out.probe_mean) /
                    (nt - 1.0);
        out.probe_stderr = std::sqrt(std::max(vp, 0.0) / nt);
    }
    return out;
}

}  // namespace

std::vector<double> default_probe_hs() {
    return {1e-1, 2.5e-2, 6.25e-3, 1.5625e-3};
}

LimitTensors estimate_limit_tensors(const HFamily& fam,
                                    const std::vector<double>& probe_hs) {
    if (probe_hs.size() < 3)
        throw PreconditionError("need at least 3 probe step sizes");
    for (std::size_t i = 0; i < probe_hs.size(); ++i) {
        if (!(probe_hs[i] > 0.0))
            throw PreconditionError("probe step sizes must be positive");
        if (i > 0 && !(probe_hs[i] < probe_hs[i - 1]))
            throw PreconditionError("probe step sizes must be decreasing");
    }

    std::vector<ClassicalUnitary> cus;
    cus.reserve(probe_hs.size());
    for (double h : probe_hs) cus.push_back(fam.builder(h));
    const int n = cus.front().rv.system.n;
    for (const auto& cu : cus)
        if (cu.rv.system.n != n)
            throw PreconditionError(
                "family changes coordinate dimension across probes");

    std::vector<double> xs;
    xs.reserve(probe_hs.size());
    for (double h : probe_hs) xs.push_back(std::sqrt(h));

    LimitTensors out;
    out.n = n;
    out.probe_hs = probe_hs;
    out.m0 = CMatrix::Zero(n, n);
    out.err_m0 = RMatrix::Zero(n, n);
    out.mk.assign(static_cast<std::size_t>(n), CMatrix::Zero(n, n));
    out.err_mk.assign(static_cast<std::size_t>(n), RMatrix::Zero(n, n));

    std::vector<Complex> ys(probe_hs.size());
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            for (std::size_t m = 0; m < cus.size(); ++m)
                ys[m] = cus[m].tensor.at(i, j, 0);
            Extrapolated e = neville_at_zero(xs, ys);
            out.m0(i - 1, j - 1) = e.value;
            out.err_m0(i - 1, j - 1) = e.err;
            if (e.flagged) out.flagged.push_back(entry_label(0, i - 1, j - 1));

            for (int k = 1; k <= n; ++k) {
                for (std::size_t m = 0; m < cus.size(); ++m)
                    ys[m] = xs[m] * cus[m].tensor.at(i, j, k);
                e = neville_at_zero(xs, ys);
                out.mk[static_cast<std::size_t>(k - 1)](i - 1, j - 1) = e.value;
                out.err_mk[static_cast<std::size_t>(k - 1)](i - 1, j - 1) =
                    e.err;
                if (e.flagged)
                    out.flagged.push_back(entry_label(k, i - 1, j - 1));
            }
        }
    return out;
}

double implied_bracket_residual(const DriverSpec& d, const LimitTensors& m) {
    check_driver_shape(d, m.n);
    const int n = m.n;
    double worst = 0.0;
    auto track = [&](const CMatrix& diff) {
        worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    };

    track(d.mixing * d.mixing.transpose() - m.m0);
    track(d.mixing * d.mixing.adjoint() - CMatrix::Identity(n, n));

    for (int c = 0; c < d.sources(); ++c) {
        const double jump = jump_size(d, c);
        CMatrix target = CMatrix::Zero(n, n);
        CMatrix target2 = CMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                target(i, j) = jump * d.mixing(i, c) * d.mixing(j, c);
                target2(i, j) =
                    jump * std::conj(d.mixing(i, c)) * d.mixing(j, c);
            }
        CMatrix got = CMatrix::Zero(n, n);
        for (int l = 0; l < n; ++l)
            got += m.mk[static_cast<std::size_t>(l)] * d.mixing(l, c);
        track(target - got);

        CMatrix got2 = CMatrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    got2(i, j) +=
                        std::conj(m.mk[static_cast<std::size_t>(j)](i, k)) *
                        d.mixing(k, c);
        track(target2 - got2);
    }
    return worst;
}

DriverSpec synthesize_driver(const LimitTensors& m, double tol) {
    if (!all_finite(m.m0)) throw PreconditionError("limit tensors not finite");
    for (const auto& mat : m.mk)
        if (!all_finite(mat))
            throw PreconditionError("limit tensors not finite");
    const int n = m.n;

    auto accept = [&](const DriverSpec& d) {
        return implied_bracket_residual(d, m) <= tol;
    };

    double mk_max = 0.0;
    for (const auto& mat : m.mk)
        mk_max = std::max(mk_max, mat.cwiseAbs().maxCoeff());

    // (a) pure Brownian: mixing C with C C^T = M0 and C C^dagger = I; the
    // principal square root of a symmetric unitary M0 is symmetric unitary,
    // so it satisfies both at once.
    if (mk_max <= tol) {
        try {
            CMatrix c = principal_sqrt(m.m0);
            if (all_finite(c)) {
                DriverSpec d;
                d.n_poisson = 0;
                d.n_brownian = n;
                d.mixing = c;
                if (accept(d)) return d;
            }
        } catch (const std::exception&) {
            // fall through to the other templates
        }
    }

    // (b) per-direction sources: M0 diagonal and each M_k supported on its
    // own diagonal entry (k,k) = mu. mu != 0 is a compensated Poisson
    // direction with intensity 1/|mu|^2 and phase mu/|mu|; mu = 0 is a
    // Brownian direction with phase sqrt(M0_kk).
    {
        std::vector<int> poisson_dirs, brownian_dirs;
        std::vector<Complex> phases(static_cast<std::size_t>(n));
        std::vector<double> lambdas;
        for (int k = 0; k < n; ++k) {
            const Complex mu = m.mk[static_cast<std::size_t>(k)](k, k);
            if (std::abs(mu) > tol) {
                poisson_dirs.push_back(k);
                lambdas.push_back(1.0 / (std::abs(mu) * std::abs(mu)));
                phases[static_cast<std::size_t>(k)] = mu / std::abs(mu);
            } else {
                brownian_dirs.push_back(k);
                phases[static_cast<std::size_t>(k)] = std::sqrt(m.m0(k, k));
            }
        }
        DriverSpec d;
        d.n_poisson = static_cast<int>(poisson_dirs.size());
        d.n_brownian = static_cast<int>(brownian_dirs.size());
        d.intensities = lambdas;
        d.mixing = CMatrix::Zero(n, n);
        int col = 0;
        for (int k : poisson_dirs)
            d.mixing(k, col++) = phases[static_cast<std::size_t>(k)];
        for (int k : brownian_dirs)
            d.mixing(k, col++) = phases[static_cast<std::size_t>(k)];
        if (accept(d)) return d;
    }

    // (c) fixed mixed template in two coordinates: one compensated Poisson
    // and one Brownian source through mixing [[1,i],[i,1]]/sqrt(2).
    if (n == 2) {
        DriverSpec d;
        d.n_poisson = 1;
        d.n_brownian = 1;
        d.intensities = {1.0};
        d.mixing = CMatrix(2, 2);
        const double s = 1.0 / std::sqrt(2.0);
        d.mixing(0, 0) = Complex(s, 0);
        d.mixing(0, 1) = Complex(0, s);
        d.mixing(1, 0) = Complex(0, s);
        d.mixing(1, 1) = Complex(s, 0);
        if (accept(d)) return d;
    }

    throw PreconditionError(
        "driver synthesis not supported for this M; supply DriverSpec "
        "manually");
}

BracketReport verify_brackets(const DriverSpec& d, const LimitTensors& m,
                              double t_max, double dt, int trials,
                              std::uint64_t seed, int jobs) {
    check_driver_shape(d, m.n);
    if (!(dt > 0.0) || !(t_max > 0.0) || dt > t_max / 4.0)
        throw PreconditionError("need 0 < dt << t_max");
    if (trials <= 0) throw PreconditionError("trial count must be positive");

    const int n = m.n;
    const int n_steps = std::max(1, static_cast<int>(std::lround(t_max / dt)));
    const double dt_eff = t_max / n_steps;

    struct BlockAcc {
        CMatrix sum1, sum2;
        RMatrix sq1_re, sq1_im, sq2_re, sq2_im;
    };
    const int block = walk_block_size();
    const int n_blocks = (trials + block - 1) / block;
    std::vector<BlockAcc> acc(static_cast<std::size_t>(n_blocks));
    for (auto& a : acc) {
        a.sum1 = CMatrix::Zero(n, n);
        a.sum2 = CMatrix::Zero(n, n);
        a.sq1_re = RMatrix::Zero(n, n);
        a.sq1_im = RMatrix::Zero(n, n);
        a.sq2_re = RMatrix::Zero(n, n);
        a.sq2_im = RMatrix::Zero(n, n);
    }

    run_blocks(trials, block, jobs, [&](int b, int lo, int hi) {
        BlockAcc& a = acc[static_cast<std::size_t>(b)];
        std::vector<std::vector<int>> counts(
            static_cast<std::size_t>(d.n_poisson));
        CVector dxi(d.sources());
        CVector dz(n), z(n);
        CMatrix qv(n, n), qv2(n, n);
        for (int t = lo; t < hi; ++t) {
            Prng prng = Prng(seed).derive(static_cast<std::uint64_t>(t));
            for (int c = 0; c < d.n_poisson; ++c) {
                auto& cells = counts[static_cast<std::size_t>(c)];
                cells.assign(static_cast<std::size_t>(n_steps), 0);
                const double lam = d.intensities[static_cast<std::size_t>(c)];
                double tj = prng.exponential(lam);
                while (tj < t_max) {
                    int idx = static_cast<int>(tj / dt_eff);
                    if (idx >= n_steps) idx = n_steps - 1;
                    ++cells[static_cast<std::size_t>(idx)];
                    tj += prng.exponential(lam);
                }
            }
            z.setZero();
            qv.setZero();
            qv2.setZero();
            for (int s = 0; s < n_steps; ++s) {
                for (int c = 0; c < d.n_poisson; ++c) {
                    const double lam =
                        d.intensities[static_cast<std::size_t>(c)];
                    dxi(c) =
                        (counts[static_cast<std::size_t>(c)]
                                [static_cast<std::size_t>(s)] -
                         lam * dt_eff) /
                        std::sqrt(lam);
                }
                for (int c = d.n_poisson; c < d.sources(); ++c)
                    dxi(c) = std::sqrt(dt_eff) * prng.gaussian();
                dz = d.mixing * dxi;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        qv(i, j) += dz(i) * dz(j);
                        qv2(i, j) += std::conj(dz(i)) * dz(j);
                    }
                z += dz;
            }
            const CMatrix r1 = qv - bracket_rhs_plain(m, t_max, z);
            const CMatrix r2 = qv2 - bracket_rhs_conj(m, t_max, z);
            a.sum1 += r1;
            a.sum2 += r2;
            a.sq1_re += r1.real().cwiseProduct(r1.real());
            a.sq1_im += r1.imag().cwiseProduct(r1.imag());
            a.sq2_re += r2.real().cwiseProduct(r2.real());
            a.sq2_im += r2.imag().cwiseProduct(r2.imag());
        }
    });

    CMatrix sum1 = CMatrix::Zero(n, n), sum2 = CMatrix::Zero(n, n);
    RMatrix sq1_re = RMatrix::Zero(n, n), sq1_im = RMatrix::Zero(n, n);
    RMatrix sq2_re = RMatrix::Zero(n, n), sq2_im = RMatrix::Zero(n, n);
    for (const auto& a : acc) {
        sum1 += a.sum1;
        sum2 += a.sum2;
        sq1_re += a.sq1_re;
        sq1_im += a.sq1_im;
        sq2_re += a.sq2_re;
        sq2_im += a.sq2_im;
    }

    double lam_max = 0.0;
    for (double lam : d.intensities) lam_max = std::max(lam_max, lam);
    const double mix_sq =
        d.mixing.cwiseAbs().maxCoeff() * d.mixing.cwiseAbs().maxCoeff();
    const double allowance =
        10.0 * dt_eff * t_max * (1.0 + lam_max) * std::max(1.0, mix_sq);

    BracketReport rep;
    rep.trials = trials;
    rep.t_max = t_max;
    rep.dt = dt_eff;
    rep.seed = seed;
    const double nt = static_cast<double>(trials);
    rep.mean_qv_residual = sum1 / nt;
    rep.mean_qv2_residual = sum2 / nt;
    rep.band_qv = RMatrix::Zero(n, n);
    rep.band_qv2 = RMatrix::Zero(n, n);
    rep.worst_ratio = 0.0;
    auto band_entry = [&](const RMatrix& sq_re, const RMatrix& sq_im,
                          const CMatrix& mean, int i, int j) {
        double se = 0.0;
        if (trials > 1) {
            const double mr = mean(i, j).real();
            const double mi = mean(i, j).imag();
            double vr = (sq_re(i, j) - nt * mr * mr) / (nt - 1.0);
            double vi = (sq_im(i, j) - nt * mi * mi) / (nt - 1.0);
            se = std::sqrt((std::max(vr, 0.0) + std::max(vi, 0.0)) / nt);
        }
        return 4.0 * se + allowance;
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            rep.band_qv(i, j) =
                band_entry(sq1_re, sq1_im, rep.mean_qv_residual, i, j);
            rep.band_qv2(i, j) =
                band_entry(sq2_re, sq2_im, rep.mean_qv2_residual, i, j);
            rep.worst_ratio = std::max(
                rep.worst_ratio,
                std::abs(rep.mean_qv_residual(i, j)) / rep.band_qv(i, j));
            rep.worst_ratio = std::max(
                rep.worst_ratio,
                std::abs(rep.mean_qv2_residual(i, j)) / rep.band_qv2(i, j));
        }
    rep.passes = rep.worst_ratio <= 1.0;
    return rep;
}

SDEPath integrate_sde(const SDEModel& model, double t_max, double dt,
                      std::uint64_t seed, std::uint64_t trial,
                      bool keep_path) {
    if (!(dt > 0.0)) throw PreconditionError("dt must be positive");
    if (!(t_max >= 0.0)) throw PreconditionError("t_max must be >= 0");
    const DriverSpec& d = model.driver;
    check_driver_shape(d, model.n());
    if (model.a_tilde.rows() != model.a_tilde.cols())
        throw PreconditionError("drift operator must be square");
    for (const auto& b : model.b_tilde)
        if (b.rows() != model.dim() || b.cols() != model.dim())
            throw PreconditionError("noise operator dimension mismatch");

    const int dim = model.dim();
    const int n = model.n();
    const int n_steps =
        std::max(1, static_cast<int>(std::lround(t_max / dt)));
    const double dt_eff = t_max > 0 ? t_max / n_steps : 0.0;

    Prng prng = Prng(seed).derive(trial);

    std::vector<std::pair<double, int>> jumps;
    for (int c = 0; c < d.n_poisson; ++c) {
        const double lam = d.intensities[static_cast<std::size_t>(c)];
        double tj = prng.exponential(lam);
        while (tj < t_max) {
            jumps.emplace_back(tj, c);
            tj += prng.exponential(lam);
        }
    }
    std::sort(jumps.begin(), jumps.end());

    CMatrix u = identity(dim);
    SDEPath path;
    if (keep_path) {
        path.times.reserve(static_cast<std::size_t>(n_steps) + 1);
        path.values.reserve(static_cast<std::size_t>(n_steps) + 1);
        path.times.push_back(0.0);
        path.values.push_back(u);
    }

    // One Euler update over a jump-free interval of length delta.
    CMatrix gen(dim, dim);
    auto euler_cont = [&](double delta) {
        if (delta <= 0.0) return;
        gen = model.a_tilde * delta;
        for (int c = 0; c < d.n_poisson; ++c) {
            const double lam = d.intensities[static_cast<std::size_t>(c)];
            const double comp = -lam * delta / std::sqrt(lam);
            for (int j = 0; j < n; ++j)
                gen += model.b_tilde[static_cast<std::size_t>(j)] *
                       (d.mixing(j, c) * comp);
        }
        for (int c = d.n_poisson; c < d.sources(); ++c) {
            const double dw = std::sqrt(delta) * prng.gaussian();
            for (int j = 0; j < n; ++j)
                gen += model.b_tilde[static_cast<std::size_t>(j)] *
                       (d.mixing(j, c) * dw);
        }
        u += gen * u;
    };

    std::size_t jidx = 0;
    double t_cur = 0.0;
    for (int k = 1; k <= n_steps; ++k) {
        const double t_grid = k == n_steps ? t_max : k * dt_eff;
        while (jidx < jumps.size() && jumps[jidx].first <= t_grid) {
            euler_cont(jumps[jidx].first - t_cur);
            t_cur = jumps[jidx].first;
            const int c = jumps[jidx].second;
            const double size =
                1.0 / std::sqrt(d.intensities[static_cast<std::size_t>(c)]);
            gen.setZero();
            for (int j = 0; j < n; ++j)
                gen += model.b_tilde[static_cast<std::size_t>(j)] *
                       (d.mixing(j, c) * size);
            u += gen * u;
            ++jidx;
        }
        euler_cont(t_grid - t_cur);
        t_cur = t_grid;
        if (keep_path) {
            path.times.push_back(t_grid);
            path.values.push_back(u);
        }
    }
    if (!keep_path) {
        path.times.push_back(t_max);
        path.values.push_back(u);
    }
    return path;
}

TerminalStats walk_terminal_stats(const ClassicalUnitary& cu, int steps,
                                  int trials, std::uint64_t seed,
                                  const CMatrix& probe, int jobs) {
    if (trials <= 0) throw PreconditionError("trial count must be positive");
    const int d = cu.dim_sys;
    const int block = walk_block_size();
    const int n_blocks = (trials + block - 1) / block;
    std::vector<StatsAcc> acc(static_cast<std::size_t>(n_blocks));
    for (auto& a : acc) a.init(d);

    run_blocks(trials, block, jobs, [&](int b, int lo, int hi) {
        StatsAcc& a = acc[static_cast<std::size_t>(b)];
        CMatrix v(d, d);
        for (int t = lo; t < hi; ++t) {
            Prng prng = walk_stream(seed, static_cast<std::uint64_t>(t));
            v = identity(d);
            for (int m = 0; m < steps; ++m) {
                const int outcome = prng.categorical(cu.p);
                v = cu.branches[static_cast<std::size_t>(outcome)].u * v;
            }
            a.add(v, probe);
        }
    });
    return finalize_stats(acc, d, trials);
}

TerminalStats sde_terminal_stats(const SDEModel& model, double t_max,
                                 double dt, int trials, std::uint64_t seed,
                                 const CMatrix& probe, int jobs) {
    if (trials <= 0) throw PreconditionError("trial count must be positive");
    const int d = model.dim();
    const int block = walk_block_size();
    const int n_blocks = (trials + block - 1) / block;
    std::vector<StatsAcc> acc(static_cast<std::size_t>(n_blocks));
    for (auto& a : acc) a.init(d);

    run_blocks(trials, block, jobs, [&](int b, int lo, int hi) {
        StatsAcc& a = acc[static_cast<std::size_t>(b)];
        for (int t = lo; t < hi; ++t) {
            SDEPath p = integrate_sde(model, t_max, dt, seed,
                                      static_cast<std::uint64_t>(t), false);
            a.add(p.terminal(), probe);
        }
    });
    return finalize_stats(acc, d, trials);
}

WeakStudy weak_convergence_study(const HFamily& fam, const SDEModel& model,
                                 double t, const std::vector<double>& hs,
                                 int trials, std::uint64_t seed, double sde_dt,
                                 int jobs) {
    if (hs.empty()) throw PreconditionError("need at least one step size");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        if (!(hs[i] > 0.0))
            throw PreconditionError("step sizes must be positive");
        if (i > 0 && !(hs[i] < hs[i - 1]))
            throw PreconditionError("step sizes must be decreasing");
    }

    const int d = model.dim();
    const CMatrix probe = probe_matrix(d);
    const std::uint64_t sde_seed =
        Prng(seed).derive(0xffffffffull).next_u64();
    const TerminalStats sde =
        sde_terminal_stats(model, t, sde_dt, trials, sde_seed, probe, jobs);

    WeakStudy study;
    study.hs = hs;

    for (std::size_t level = 0; level < hs.size(); ++level) {
        const double h = hs[level];
        const int steps = static_cast<int>(std::floor(t / h + 1e-9));
        const ClassicalUnitary cu = fam.builder(h);
        if (cu.dim_sys != d)
            throw PreconditionError("family and model dimensions differ");
        const std::uint64_t level_seed = Prng(seed).derive(level).next_u64();
        const TerminalStats disc =
            walk_terminal_stats(cu, steps, trials, level_seed, probe, jobs);

        double err_sq = 0.0, sigma_term = 0.0, sigma_sq_sum = 0.0;
        int n_obs = 0;
        auto push = [&](const std::string& name, double dm, double sm,
                        double sd, double ss) {
            WeakRow row;
            row.h = h;
            row.observable = name;
            row.discrete_mean = dm;
            row.sde_mean = sm;
            row.abs_error = std::abs(dm - sm);
            row.stderr_combined = std::sqrt(sd * sd + ss * ss);
            err_sq += row.abs_error * row.abs_error;
            sigma_term += row.abs_error * row.abs_error *
                          row.stderr_combined * row.stderr_combined;
            sigma_sq_sum += row.stderr_combined * row.stderr_combined;
            ++n_obs;
            study.rows.push_back(std::move(row));
        };
        char name[48];
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                std::snprintf(name, sizeof(name), "Re(V[%d][%d])", i + 1,
                              j + 1);
                push(name, disc.mean(i, j).real(), sde.mean(i, j).real(),
                     disc.stderr_re(i, j), sde.stderr_re(i, j));
                std::snprintf(name, sizeof(name), "Im(V[%d][%d])", i + 1,
                              j + 1);
                push(name, disc.mean(i, j).imag(), sde.mean(i, j).imag(),
                     disc.stderr_im(i, j), sde.stderr_im(i, j));
            }
        push("Re(tr(V*MV))", disc.probe_mean, sde.probe_mean,
             disc.probe_stderr, sde.probe_stderr);

        const double err = std::sqrt(err_sq);
        // Delta method for the l2 aggregate; falls back to the rms sigma when
        // the error itself is at noise level.
        double sigma = err > 1e-12
                           ? std::sqrt(sigma_term) / err
                           : std::sqrt(sigma_sq_sum /
                                       std::max(1, n_obs));
        study.aggregate_error.push_back(err);
        study.aggregate_sigma.push_back(sigma);
    }

    study.monotone = true;
    for (std::size_t k = 0; k + 1 < hs.size(); ++k) {
        const double band =
            2.0 * std::sqrt(study.aggregate_sigma[k] * study.aggregate_sigma[k] +
                            study.aggregate_sigma[k + 1] *
                                study.aggregate_sigma[k + 1]);
        const bool drops =
            study.aggregate_error[k] > study.aggregate_error[k + 1] + band;
        study.level_decreases.push_back(drops);
        if (!drops) study.monotone = false;
    }

    if (hs.size() >= 2) {
        double slx = 0, sly = 0, sxx = 0, sxy = 0;
        const double nn = static_cast<double>(hs.size());
        for (std::size_t k = 0; k < hs.size(); ++k) {
            slx += std::log(hs[k]);
            sly += std::log(std::max(study.aggregate_error[k], 1e-300));
        }
        const double mx = slx / nn, my = sly / nn;
        for (std::size_t k = 0; k < hs.size(); ++k) {
            const double dx = std::log(hs[k]) - mx;
            const double dy =
                std::log(std::max(study.aggregate_error[k], 1e-300)) - my;
            sxx += dx * dx;
            sxy += dx * dy;
        }
        study.empirical_order = sxx > 0 ? sxy / sxx : 0.0;
    }
    return study;
}

double first_jump_ks(const ClassicalUnitary& cu, double h, int jump_outcome,
                     int trials, std::uint64_t seed) {
    if (!(h > 0.0)) throw PreconditionError("h must be positive");
    if (trials <= 0) throw PreconditionError("trial count must be positive");
    if (jump_outcome < 1 ||
        jump_outcome > static_cast<int>(cu.branches.size()))
        throw PreconditionError("jump outcome index out of range");

    const int target = jump_outcome - 1;
    const long cap = static_cast<long>(std::ceil(20.0 / h));
    std::vector<double> samples(static_cast<std::size_t>(trials));
    for (int t = 0; t < trials; ++t) {
        Prng prng = walk_stream(seed, static_cast<std::uint64_t>(t));
        long tau = cap;
        for (long m = 1; m <= cap; ++m) {
            if (prng.categorical(cu.p) == target) {
                tau = m;
                break;
            }
        }
        samples[static_cast<std::size_t>(t)] = h * static_cast<double>(tau);
    }
    std::sort(samples.begin(), samples.end());
    double ks = 0.0;
    const double nt = static_cast<double>(trials);
    for (int i = 0; i < trials; ++i) {
        const double f = 1.0 - std::exp(-samples[static_cast<std::size_t>(i)]);
        ks = std::max(ks, std::abs(f - static_cast<double>(i) / nt));
        ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / nt));
    }
    return ks;
}

namespace {

std::string real_matrix_json(const RMatrix& m) {
    std::string out = "{\"rows\":" + std::to_string(m.rows()) +
                      ",\"cols\":" + std::to_string(m.cols()) +
                      ",\"entries\":[";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (i != 0 || j != 0) out += ',';
            out += fmt17(m(i, j));
        }
    out += "]}";
    return out;
}

}  // namespace

std::string driver_spec_to_json_string(const DriverSpec& d) {
    std::string out = "{\"n_poisson\":" + std::to_string(d.n_poisson) +
                      ",\"n_brownian\":" + std::to_string(d.n_brownian) +
                      ",\"intensities\":[";
    for (std::size_t k = 0; k < d.intensities.size(); ++k) {
        if (k) out += ',';
        out += fmt17(d.intensities[k]);
    }
    out += "],\"mixing\":" + matrix_json(d.mixing) + "}";
    return out;
}

std::string sde_model_to_json_string(const SDEModel& m) {
    std::string out = "{\"a_tilde\":" + matrix_json(m.a_tilde) +
                      ",\"b_tilde\":[";
    for (std::size_t j = 0; j < m.b_tilde.size(); ++j) {
        if (j) out += ',';
        out += matrix_json(m.b_tilde[j]);
    }
    out += "],\"driver\":" + driver_spec_to_json_string(m.driver) + "}";
    return out;
}

std::string limit_tensors_to_json_string(const LimitTensors& t) {
    std::string out = "{\"n\":" + std::to_string(t.n) + ",\"probe_hs\":[";
    for (std::size_t k = 0; k < t.probe_hs.size(); ++k) {
        if (k) out += ',';
        out += fmt17(t.probe_hs[k]);
    }
    out += "],\"m0\":" + matrix_json(t.m0) + ",\"mk\":[";
    for (std::size_t k = 0; k < t.mk.size(); ++k) {
        if (k) out += ',';
        out += matrix_json(t.mk[k]);
    }
    out += "],\"err_m0\":" + real_matrix_json(t.err_m0) + ",\"err_mk\":[";
    for (std::size_t k = 0; k < t.err_mk.size(); ++k) {
        if (k) out += ',';
        out += real_matrix_json(t.err_mk[k]);
    }
    out += "],\"flagged\":[";
    for (std::size_t k = 0; k < t.flagged.size(); ++k) {
        if (k) out += ',';
        out += '"' + t.flagged[k] + '"';
    }
    out += "]}";
    return out;
}

DriverSpec driver_spec_from_json(const std::string& text) {
    const auto j = detail::parse_json(text, "driver spec");
    if (!j.is_object()) throw InputError("driver spec must be a JSON object");
    DriverSpec d;
    if (!j.contains("n_poisson") || !j.contains("n_brownian") ||
        !j.contains("mixing"))
        throw InputError("driver spec needs n_poisson, n_brownian, mixing");
    if (!j["n_poisson"].is_number_integer() ||
        !j["n_brownian"].is_number_integer())
        throw InputError("driver source counts must be integers");
    d.n_poisson = j["n_poisson"].get<int>();
    d.n_brownian = j["n_brownian"].get<int>();
    if (j.contains("intensities")) {
        if (!j["intensities"].is_array())
            throw InputError("driver intensities must be an array");
        for (const auto& v : j["intensities"])
            d.intensities.push_back(detail::finite_number(v, "intensity"));
    }
    d.mixing = detail::matrix_from_json(j["mixing"], "driver mixing");
    check_driver_shape(d, static_cast<int>(d.mixing.rows()));
    return d;
}

SDEModel sde_model_from_json(const std::string& text) {
    const auto j = detail::parse_json(text, "sde model");
    if (!j.is_object()) throw InputError("sde model must be a JSON object");
    if (!j.contains("a_tilde") || !j.contains("b_tilde") ||
        !j.contains("driver"))
        throw InputError("sde model needs a_tilde, b_tilde, driver");
    SDEModel m;
    m.a_tilde = detail::matrix_from_json(j["a_tilde"], "a_tilde");
    if (m.a_tilde.rows() != m.a_tilde.cols())
        throw InputError("a_tilde must be square");
    if (!j["b_tilde"].is_array())
        throw InputError("b_tilde must be an array of matrices");
    for (const auto& bj : j["b_tilde"]) {
        CMatrix b = detail::matrix_from_json(bj, "b_tilde entry");
        if (b.rows() != m.a_tilde.rows() || b.cols() != m.a_tilde.cols())
            throw InputError("b_tilde entries must match a_tilde's shape");
        m.b_tilde.push_back(std::move(b));
    }
    m.driver = driver_spec_from_json(j["driver"].dump());
    if (m.driver.dim() != m.n())
        throw InputError("driver dimension must equal the number of b_tilde");
    return m;
}

}  // namespace obwalk
