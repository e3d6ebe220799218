#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "obwalk/channel.hpp"
#include "obwalk/numerics.hpp"

namespace obwalk {

/**
 * Continuous-time driver built from independent sources: standard Brownian
 * motions W_k and compensated normalized Poisson processes
 * P_k(t) = (N_k(t) - lambda_k t)/sqrt(lambda_k), which jump by
 * 1/sqrt(lambda_k) at rate lambda_k. Component j of the driving noise is
 * Z^j = sum_c mixing(j, c) * source_c, with the n_poisson Poisson columns
 * first, then the n_brownian Brownian columns.
 */
struct DriverSpec {
    int n_poisson = 0;
    int n_brownian = 0;
    std::vector<double> intensities;  // one lambda per Poisson column
    CMatrix mixing;                   // N x (n_poisson + n_brownian)

    int sources() const { return n_poisson + n_brownian; }
    int dim() const { return static_cast<int>(mixing.rows()); }
};

/**
 * Small-step limits of the walk coordinate tensor: m0(i,j) is the limit of
 * the deterministic coefficient S^{ij}_0(h), and mk[k-1](i,j) is the limit of
 * sqrt(h) * S^{ij}_k(h) for k = 1..N. Extrapolation error estimates are per
 * entry; entries whose estimate grew when adding the last probe are listed in
 * `flagged` (the sequence gave no evidence of convergence there).
 */
struct LimitTensors {
    int n = 0;
    CMatrix m0;
    std::vector<CMatrix> mk;
    std::vector<double> probe_hs;
    RMatrix err_m0;
    std::vector<RMatrix> err_mk;
    std::vector<std::string> flagged;

    bool all_converged() const { return flagged.empty(); }
};

/**
 * Limit equation dU = A_tilde U dt + sum_j B_tilde[j] U dZ^j with the driver
 * supplying the Z components.
 */
struct SDEModel {
    CMatrix a_tilde;
    std::vector<CMatrix> b_tilde;
    DriverSpec driver;

    int dim() const { return static_cast<int>(a_tilde.rows()); }
    int n() const { return static_cast<int>(b_tilde.size()); }
};

/**
 * A family of interaction unitaries indexed by the time step h, typically
 * U_i(h) = exp(sqrt(h) O_i + h P_i). When the limit objects are known in
 * closed form they ride along in `model` (has_model = true).
 */
struct HFamily {
    std::string name;
    std::function<ClassicalUnitary(double)> builder;
    bool has_model = false;
    SDEModel model;
};

/** Geometric probe set {1e-1, 2.5e-2, 6.25e-3, 1.5625e-3} (ratio 1/4). */
std::vector<double> default_probe_hs();

/**
 * Estimates the limit tensors by polynomial extrapolation in x = sqrt(h)
 * (Neville tableau evaluated at x = 0; with a geometric probe set this is
 * plain Richardson extrapolation). Needs at least 3 decreasing probes.
 * Non-convergent entries are flagged, not fatal.
 */
LimitTensors estimate_limit_tensors(const HFamily& fam,
                                    const std::vector<double>& probe_hs);

/**
 * Max-abs residual of the bracket identities implied by the driver against
 * the limit tensors, checked source-by-source:
 *   mixing mixing^T = M0,   mixing mixing^dagger = I,
 *   per source c:  c_c mix(i,c) mix(j,c)        = sum_l M^{ij}_l mix(l,c),
 *                  c_c conj(mix(i,c)) mix(j,c)  = sum_k conj(M^{ik}_j) mix(k,c),
 * where c_c = 1/sqrt(lambda_c) for Poisson columns and 0 for Brownian ones.
 * These are the coefficient-matching forms of the quadratic-covariation laws
 * [Z^i,Z^j]_t = M^{ij}_0 t + sum_k M^{ij}_k Z^k_t and
 * [conj(Z^i),Z^j]_t = delta_ij t + sum_k conj(M^{ik}_j) Z^k_t.
 */
double implied_bracket_residual(const DriverSpec& d, const LimitTensors& m);

/**
 * Matches the limit tensors against driver templates, in order: (a) pure
 * multidimensional Brownian (all M_k = 0, mixing = principal sqrt of M0),
 * (b) per-direction sources (M0 diagonal, each M_k supported on entry (k,k);
 * a nonzero diagonal value mu gives a Poisson direction with intensity
 * 1/|mu|^2 and phase mu/|mu|), (c) a fixed two-dimensional mixed template
 * with M0 = [[0,i],[i,0]] realized by one Poisson and one Brownian source
 * through mixing [[1,i],[i,1]]/sqrt(2). Returns the first candidate whose
 * implied_bracket_residual is <= tol; otherwise throws PreconditionError
 * ("driver synthesis not supported for this M; supply DriverSpec manually").
 */
DriverSpec synthesize_driver(const LimitTensors& m, double tol);

struct BracketReport {
    int trials = 0;
    double t_max = 0, dt = 0;
    std::uint64_t seed = 0;
    CMatrix mean_qv_residual;   // mean over trials of QV - predicted bracket
    CMatrix mean_qv2_residual;  // same for the conjugated bracket
    RMatrix band_qv;            // 4 x stderr + discretization allowance
    RMatrix band_qv2;
    double worst_ratio = 0.0;   // max |mean residual| / band
    bool passes = false;
};

/**
 * Monte-Carlo check of the bracket identities: simulates driver paths on a
 * dt-grid with exact exponential jump clocks, accumulates the discrete
 * quadratic covariations sum dZ^i dZ^j and sum conj(dZ^i) dZ^j, and compares
 * them pathwise against the tensor predictions evaluated at the same path's
 * terminal Z. The discrete covariations are unbiased up to O(dt) (Poisson
 * jump coincidences), hence the additive allowance in the band.
 */
BracketReport verify_brackets(const DriverSpec& d, const LimitTensors& m,
                              double t_max, double dt, int trials,
                              std::uint64_t seed, int jobs = 0);

struct SDEPath {
    std::vector<double> times;
    std::vector<CMatrix> values;

    const CMatrix& terminal() const { return values.back(); }
};

/**
 * Euler scheme for the limit equation with exact jump handling: Poisson jump
 * times are sampled from exponential clocks and split the affected grid cell,
 * so jump timing carries no O(dt) bias. Between events
 * U += (A_tilde dl + sum_j B_tilde[j] dZ^j_cont) U with the Brownian and
 * compensator parts of dZ; at a jump of source c,
 * U += sum_j B_tilde[j] mixing(j,c)/sqrt(lambda_c) U.
 * The path is reported on the dt-grid. Trial selects the RNG substream.
 */
SDEPath integrate_sde(const SDEModel& model, double t_max, double dt,
                      std::uint64_t seed, std::uint64_t trial = 0,
                      bool keep_path = true);

/**
 * Mean and spread of terminal statistics over Monte-Carlo trials: the
 * entrywise mean of V with per-entry standard errors (real and imaginary
 * parts separately) plus one scalar probe observable Re tr(V^dagger M V).
 * Deterministic for any jobs value (fixed-block reduction).
 */
struct TerminalStats {
    CMatrix mean;
    RMatrix stderr_re;
    RMatrix stderr_im;
    double probe_mean = 0.0;
    double probe_stderr = 0.0;
    int trials = 0;
};

TerminalStats walk_terminal_stats(const ClassicalUnitary& cu, int steps,
                                  int trials, std::uint64_t seed,
                                  const CMatrix& probe, int jobs = 0);

TerminalStats sde_terminal_stats(const SDEModel& model, double t_max,
                                 double dt, int trials, std::uint64_t seed,
                                 const CMatrix& probe, int jobs = 0);

struct WeakRow {
    double h = 0;
    std::string observable;
    double discrete_mean = 0;
    double sde_mean = 0;
    double abs_error = 0;
    double stderr_combined = 0;
};

struct WeakStudy {
    std::vector<double> hs;
    std::vector<WeakRow> rows;
    std::vector<double> aggregate_error;  // l2 over observables, per h
    std::vector<double> aggregate_sigma;  // delta-method sigma of the l2 error
    std::vector<bool> level_decreases;    // err_k > err_{k+1} + 2 sigma_comb
    bool monotone = false;
    double empirical_order = 0.0;  // log-log slope of error vs h
};

/**
 * Weak-convergence study: for each h runs the discrete walk to step
 * floor(t/h) and compares E[f(V)] against the SDE reference at time t for the
 * default observables (Re/Im of every entry, plus Re tr(V^dagger M V) with
 * M = diag(1..d)/d). The SDE reference is simulated once and shared across h
 * levels. Monotonicity asks every consecutive error drop to clear a 2-sigma
 * combined Monte-Carlo band.
 */
WeakStudy weak_convergence_study(const HFamily& fam, const SDEModel& model,
                                 double t, const std::vector<double>& hs,
                                 int trials, std::uint64_t seed,
                                 double sde_dt = 1e-3, int jobs = 0);

/**
 * Kolmogorov-Smirnov distance between the h-scaled time of the first
 * occurrence of `jump_outcome` (1-based) in the walk and the unit
 * exponential law. The per-step hit probability is geometric, so the scaled
 * law converges to Exp(1) as h -> 0. Trials are capped at ceil(20/h) steps;
 * the censored tail mass is ~e^{-20} and does not move the statistic.
 */
double first_jump_ks(const ClassicalUnitary& cu, double h, int jump_outcome,
                     int trials, std::uint64_t seed);

std::string driver_spec_to_json_string(const DriverSpec& d);
DriverSpec driver_spec_from_json(const std::string& text);
std::string sde_model_to_json_string(const SDEModel& m);
SDEModel sde_model_from_json(const std::string& text);
std::string limit_tensors_to_json_string(const LimitTensors& t);

}  // namespace obwalk
