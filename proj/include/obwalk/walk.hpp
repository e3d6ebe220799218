#pragma once

#include <cstdint>
#include <vector>

#include "obwalk/channel.hpp"
#include "obwalk/numerics.hpp"

namespace obwalk {

/**
 * One sampled trajectory of the unitary random walk driven by repeated
 * interactions. Step outcomes are 1-based (outcome k means branch k was
 * measured on the fresh environment copy); outcome_indices[m] is the outcome
 * of step m+1. unitaries holds V_0 = I, V_1, ..., V_n unless the trajectory
 * was sampled terminal-only, in which case it holds just {V_n} (n >= 1).
 */
struct WalkTrajectory {
    int steps = 0;
    std::uint64_t seed = 0;
    bool terminal_only = false;
    std::vector<int> outcome_indices;
    std::vector<CMatrix> unitaries;

    const CMatrix& terminal() const { return unitaries.back(); }
};

/**
 * Stream used for trial `trial` of a walk experiment with master seed `seed`.
 * Each trial draws from an independently derived SplitMix64 stream, so results
 * are reproducible per (seed, trial) and independent of scheduling.
 */
Prng walk_stream(std::uint64_t seed, std::uint64_t trial);

/**
 * Samples one trajectory of length `steps`: at each step an outcome i is drawn
 * with probability p_i and the walk multiplies V <- U_i V. Branch operators
 * are re-verified against A + sum_j v_i^j B_j before the walk starts; a
 * residual above 1e-9 aborts with InternalError (the walk's one-step mean
 * would not be A otherwise).
 */
WalkTrajectory simulate_walk(const ClassicalUnitary& cu, int steps,
                             std::uint64_t seed, std::uint64_t trial = 0,
                             bool keep_path = true);

struct MonteCarloResult {
    int steps = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    CMatrix mean;        // empirical mean of V_n rho V_n^dagger
    RMatrix stderr_abs;  // per-entry stderr combining Re and Im spread
};

/**
 * Monte-Carlo estimate of E[V_n rho V_n^dagger] over `trials` trajectories.
 * Trials are processed in fixed-size blocks with per-block partial sums
 * reduced in block order, so the result is byte-identical for any `jobs`.
 * The exact value is the n-fold iterate of the repeated-interaction channel.
 */
MonteCarloResult monte_carlo_channel(const ClassicalUnitary& cu,
                                     const CMatrix& rho, int steps, int trials,
                                     std::uint64_t seed, int jobs = 0);

/**
 * n-fold application of the channel rho -> sum_i p_i U_i rho U_i^dagger,
 * the exact law of the walk-averaged state. Used as the oracle for both the
 * Monte-Carlo estimator and the full tensor evolution.
 */
CMatrix iterate_channel(const ClassicalUnitary& cu, const CMatrix& rho, int n);

/**
 * Exact repeated-interaction evolution without measurement: couples the
 * system to n fresh environment copies, applies the interaction unitary to
 * (system, copy k) at step k, and returns the reduced system state
 * Tr_env(V (rho ox E) V^dagger) where E projects every copy on e_0.
 * Requires dim_sys * dim_env^n <= 4096; never materializes the chain
 * operator, only dim_sys chain vectors. Must agree with iterate_channel.
 */
CMatrix full_tensor_evolution(const ClassicalUnitary& cu, int n,
                              const CMatrix& rho);

/**
 * Enumerates all outcome words of length n with their probabilities and
 * walk endpoints (V_word, P(word)). Exponential in n; intended for the
 * martingale and law tests at small n.
 */
struct OutcomeWord {
    std::vector<int> word;  // 1-based outcomes
    double probability = 0.0;
    CMatrix endpoint;
};
std::vector<OutcomeWord> enumerate_walk(const ClassicalUnitary& cu, int n);

}  // namespace obwalk
