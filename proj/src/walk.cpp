#include "obwalk/walk.hpp"

#include <cmath>
#include <cstdio>

#include "obwalk/parallel.hpp"
#include "obwalk/rng.hpp"

namespace obwalk {

namespace {

void check_branch_identities(const ClassicalUnitary& cu) {
    const int outcomes = static_cast<int>(cu.branches.size());
    const int n = cu.rv.system.n;
    for (int i = 0; i < outcomes; ++i) {
        CMatrix rebuilt = cu.A;
        for (int j = 0; j < n; ++j)
            rebuilt += cu.rv.system.vectors[static_cast<std::size_t>(i)](j) *
                       cu.B[static_cast<std::size_t>(j)];
        const double res =
            distance(rebuilt, cu.branches[static_cast<std::size_t>(i)].u);
        if (res > 1e-9) {
            char buf[128];
            std::snprintf(buf, sizeof(buf),
                          "branch %d violates A + sum_j v^j B_j = U (residual "
                          "%.3e)",
                          i + 1, res);
            throw InternalError(buf);
        }
    }
}

}  // namespace

Prng walk_stream(std::uint64_t seed, std::uint64_t trial) {
    return Prng(seed).derive(trial);
}

WalkTrajectory simulate_walk(const ClassicalUnitary& cu, int steps,
                             std::uint64_t seed, std::uint64_t trial,
                             bool keep_path) {
    if (steps < 0) throw PreconditionError("walk length must be >= 0");
    check_branch_identities(cu);

    Prng prng = walk_stream(seed, trial);
    WalkTrajectory traj;
    traj.steps = steps;
    traj.seed = seed;
    traj.terminal_only = !keep_path && steps >= 1;
    traj.outcome_indices.reserve(static_cast<std::size_t>(steps));

    CMatrix v = identity(cu.dim_sys);
    if (keep_path || steps == 0) traj.unitaries.push_back(v);
    if (traj.terminal_only) traj.unitaries.push_back(identity(cu.dim_sys));
    for (int m = 0; m < steps; ++m) {
        const int outcome = prng.categorical(cu.p);
        traj.outcome_indices.push_back(outcome + 1);
        v = cu.branches[static_cast<std::size_t>(outcome)].u * v;
        if (keep_path) traj.unitaries.push_back(v);
    }
    if (traj.terminal_only) traj.unitaries.back() = v;
    return traj;
}

MonteCarloResult monte_carlo_channel(const ClassicalUnitary& cu,
                                     const CMatrix& rho, int steps, int trials,
                                     std::uint64_t seed, int jobs) {
    if (trials <= 0) throw PreconditionError("trial count must be positive");
    if (rho.rows() != cu.dim_sys || rho.cols() != cu.dim_sys)
        throw PreconditionError("state dimension does not match the system");

    const int d = cu.dim_sys;
    const int block = walk_block_size();
    const int n_blocks = (trials + block - 1) / block;

    struct BlockAcc {
        CMatrix sum;
        RMatrix sq_re;
        RMatrix sq_im;
    };
    std::vector<BlockAcc> acc(static_cast<std::size_t>(n_blocks));
    for (auto& a : acc) {
        a.sum = CMatrix::Zero(d, d);
        a.sq_re = RMatrix::Zero(d, d);
        a.sq_im = RMatrix::Zero(d, d);
    }

    // The verification and the outcome table are shared and read-only.
    check_branch_identities(cu);
    const auto& branches = cu.branches;
    const auto& p = cu.p;

    run_blocks(trials, block, jobs, [&](int b, int lo, int hi) {
        BlockAcc& a = acc[static_cast<std::size_t>(b)];
        CMatrix v(d, d);
        for (int t = lo; t < hi; ++t) {
            Prng prng = walk_stream(seed, static_cast<std::uint64_t>(t));
            v = identity(d);
            for (int m = 0; m < steps; ++m) {
                const int outcome = prng.categorical(p);
                v = branches[static_cast<std::size_t>(outcome)].u * v;
            }
            const CMatrix s = v * rho * v.adjoint();
            a.sum += s;
            a.sq_re += s.real().cwiseProduct(s.real());
            a.sq_im += s.imag().cwiseProduct(s.imag());
        }
    });

    CMatrix sum = CMatrix::Zero(d, d);
    RMatrix sq_re = RMatrix::Zero(d, d);
    RMatrix sq_im = RMatrix::Zero(d, d);
    for (const auto& a : acc) {
        sum += a.sum;
        sq_re += a.sq_re;
        sq_im += a.sq_im;
    }

    MonteCarloResult out;
    out.steps = steps;
    out.trials = trials;
    out.seed = seed;
    out.mean = sum / static_cast<double>(trials);
    out.stderr_abs = RMatrix::Zero(d, d);
    if (trials > 1) {
        const double nt = static_cast<double>(trials);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                const double mr = out.mean(i, j).real();
                const double mi = out.mean(i, j).imag();
                double var_re = (sq_re(i, j) - nt * mr * mr) / (nt - 1.0);
                double var_im = (sq_im(i, j) - nt * mi * mi) / (nt - 1.0);
                if (var_re < 0) var_re = 0;  // cancellation guard
                if (var_im < 0) var_im = 0;
                out.stderr_abs(i, j) = std::sqrt((var_re + var_im) / nt);
            }
    }
    return out;
}

CMatrix iterate_channel(const ClassicalUnitary& cu, const CMatrix& rho,
                        int n) {
    if (rho.rows() != cu.dim_sys || rho.cols() != cu.dim_sys)
        throw PreconditionError("state dimension does not match the system");
    CMatrix state = rho;
    for (int m = 0; m < n; ++m) {
        CMatrix next = CMatrix::Zero(cu.dim_sys, cu.dim_sys);
        for (std::size_t i = 0; i < cu.branches.size(); ++i)
            next += cu.p[i] * cu.branches[i].u * state *
                    cu.branches[i].u.adjoint();
        state = next;
    }
    return state;
}

CMatrix full_tensor_evolution(const ClassicalUnitary& cu, int n,
                              const CMatrix& rho) {
    if (n < 0) throw PreconditionError("step count must be >= 0");
    if (rho.rows() != cu.dim_sys || rho.cols() != cu.dim_sys)
        throw PreconditionError("state dimension does not match the system");

    const int ds = cu.dim_sys;
    const int de = cu.dim_env;
    double budget = static_cast<double>(ds);
    for (int k = 0; k < n; ++k) {
        budget *= de;
        if (budget > 4096.0)
            throw PreconditionError(
                "chain dimension dim_sys * dim_env^n exceeds 4096");
    }
    const long dim_chain = static_cast<long>(budget + 0.5);
    long dim_env_total = 1;
    for (int k = 0; k < n; ++k) dim_env_total *= de;

    // psi_a = V (|a> ox e_0 ox ... ox e_0), evolved in place; applying the
    // interaction to (system, copy k) only touches the k-th base-de digit.
    std::vector<CVector> psi(static_cast<std::size_t>(ds));
    for (int a = 0; a < ds; ++a) {
        psi[static_cast<std::size_t>(a)] = CVector::Zero(dim_chain);
        psi[static_cast<std::size_t>(a)](a * dim_env_total) = 1.0;
    }

    CVector gathered(static_cast<long>(ds) * de);
    for (int step = 0; step < n; ++step) {
        long stride = 1;
        for (int k = step + 1; k < n; ++k) stride *= de;  // digit weight
        const long outer = dim_env_total / (stride * de);
        for (auto& v : psi) {
            for (long hi = 0; hi < outer; ++hi)
                for (long lo = 0; lo < stride; ++lo) {
                    const long base = hi * stride * de + lo;
                    for (int a = 0; a < ds; ++a)
                        for (int s = 0; s < de; ++s)
                            gathered(a * de + s) =
                                v(a * dim_env_total + base + s * stride);
                    CVector mixed = cu.u_total * gathered;
                    for (int a = 0; a < ds; ++a)
                        for (int s = 0; s < de; ++s)
                            v(a * dim_env_total + base + s * stride) =
                                mixed(a * de + s);
                }
        }
    }

    // Tr_env(V (rho ox E) V^dagger) = sum_ab rho_ab Tr_env |psi_a><psi_b|.
    CMatrix out = CMatrix::Zero(ds, ds);
    for (int a = 0; a < ds; ++a)
        for (int b = 0; b < ds; ++b) {
            if (rho(a, b) == Complex(0, 0)) continue;
            const CVector& pa = psi[static_cast<std::size_t>(a)];
            const CVector& pb = psi[static_cast<std::size_t>(b)];
            for (int i = 0; i < ds; ++i)
                for (int j = 0; j < ds; ++j) {
                    Complex acc(0, 0);
                    for (long e = 0; e < dim_env_total; ++e)
                        acc += pa(i * dim_env_total + e) *
                               std::conj(pb(j * dim_env_total + e));
                    out(i, j) += rho(a, b) * acc;
                }
        }
    return out;
}

std::vector<OutcomeWord> enumerate_walk(const ClassicalUnitary& cu, int n) {
    if (n < 0) throw PreconditionError("step count must be >= 0");
    const int outcomes = static_cast<int>(cu.branches.size());
    std::vector<OutcomeWord> words;
    OutcomeWord root;
    root.probability = 1.0;
    root.endpoint = identity(cu.dim_sys);
    words.push_back(root);
    for (int m = 0; m < n; ++m) {
        std::vector<OutcomeWord> next;
        next.reserve(words.size() * static_cast<std::size_t>(outcomes));
        for (const auto& w : words)
            for (int i = 0; i < outcomes; ++i) {
                OutcomeWord extended = w;
                extended.word.push_back(i + 1);
                extended.probability *= cu.p[static_cast<std::size_t>(i)];
                extended.endpoint =
                    cu.branches[static_cast<std::size_t>(i)].u * w.endpoint;
                next.push_back(std::move(extended));
            }
        words = std::move(next);
    }
    return words;
}

}  // namespace obwalk
