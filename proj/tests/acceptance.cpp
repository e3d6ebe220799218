// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Tolerances and runtime bounds are pinned here on purpose; loosen
// them only with a written justification in the project history.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "obwalk/channel.hpp"
#include "obwalk/limit.hpp"
#include "obwalk/numerics.hpp"
#include "obwalk/obtuse.hpp"
#include "obwalk/presets.hpp"
#include "obwalk/rng.hpp"
#include "obwalk/tensor3.hpp"
#include "obwalk/walk.hpp"
#include "test_support.hpp"

using namespace obwalk;
using testing::random_density;

namespace {

int g_failures = 0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s  [%s]\n", idx, name,
                pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3e", x);
    return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_1() {
    CVector v1(2), v2(2), v3(2);
    v1 << 1.0, 0.0;
    v2 << -1.0, 1.0;
    v3 << -1.0, -2.0;
    std::vector<CVector> vs = {v1, v2, v3};

    const auto t0 = Clock::now();
    ObtuseSystem s = validate_obtuse(vs);
    const double elapsed = seconds_since(t0);

    const double d0 = std::abs(s.probabilities[0] - 0.5);
    const double d1 = std::abs(s.probabilities[1] - 1.0 / 3.0);
    const double d2 = std::abs(s.probabilities[2] - 1.0 / 6.0);
    const double worst = std::max(d0, std::max(d1, d2));
    const bool pass = worst <= 1e-14 && elapsed < 1e-3;
    report(1, "golden obtuse system", pass,
           "law error " + fmt(worst) + ", " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 2
void criterion_2() {
    const auto t0 = Clock::now();
    Prng prng(9001);
    double worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 1 + static_cast<int>(prng.next_u64() % 5);
        ObtuseRV rv = rv_from_system(testing::random_obtuse_system(prng, n));
        ThreeTensor t = tensor_from_rv(rv);
        worst = std::max(worst, verify_double_symmetry(t, 1e-11).worst());
        worst = std::max(worst, verify_product_relation(t, rv, 1e-11).worst());
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst <= 1e-11 && elapsed < 1.0;
    report(2, "tensor symmetry suite", pass,
           "worst residual " + fmt(worst) + " over 100 systems, " +
               fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 3
double eigenvalue_match_error(const CMatrix& m, std::vector<Complex> values) {
    Eigen::ComplexEigenSolver<CMatrix> es(m);
    double worst = 0.0;
    for (Eigen::Index e = 0; e < m.rows(); ++e) {
        const Complex lambda = es.eigenvalues()(e);
        std::size_t best = 0;
        for (std::size_t v = 1; v < values.size(); ++v)
            if (std::abs(values[v] - lambda) < std::abs(values[best] - lambda))
                best = v;
        worst = std::max(worst, std::abs(values[best] - lambda));
        values.erase(values.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return worst;
}

void criterion_3() {
    const double pairs[][2] = {{0.5, 0.0}, {0.3, 0.7}, {0.9, M_PI / 3}};
    double worst_matrix = 0.0, worst_eig = 0.0;
    for (const auto& pt : pairs) {
        const double p = pt[0], tau = pt[1], q = 1.0 - p;
        const Complex phase = std::polar(1.0, tau);
        CVector v1(1), v2(1);
        v1 << std::sqrt(q / p) * phase;
        v2 << -std::sqrt(p / q) * phase;
        ObtuseRV rv = rv_from_system(validate_obtuse({v1, v2}));
        ThreeTensor t = tensor_from_rv(rv);
        CMatrix m = multiplication_matrix(t, 1);
        CMatrix expect(2, 2);
        expect(0, 0) = 0.0;
        expect(0, 1) = std::polar(1.0, 2 * tau);
        expect(1, 0) = 1.0;
        expect(1, 1) = (q - p) / std::sqrt(p * q) * phase;
        worst_matrix = std::max(worst_matrix, distance(m, expect));
        worst_eig = std::max(
            worst_eig,
            eigenvalue_match_error(m, {rv.value(0, 1), rv.value(1, 1)}));
    }
    // Also the three-outcome golden system: each coordinate's multiplication
    // matrix must have exactly the coordinate values as spectrum.
    CVector w1(2), w2(2), w3(2);
    w1 << 1.0, 0.0;
    w2 << -1.0, 1.0;
    w3 << -1.0, -2.0;
    ObtuseRV grv = rv_from_system(validate_obtuse({w1, w2, w3}));
    ThreeTensor gt = tensor_from_rv(grv);
    for (int i = 1; i <= 2; ++i)
        worst_eig = std::max(
            worst_eig,
            eigenvalue_match_error(
                multiplication_matrix(gt, i),
                {grv.value(0, i), grv.value(1, i), grv.value(2, i)}));

    const bool pass = worst_matrix <= 1e-12 && worst_eig <= 1e-8;
    report(3, "multiplication-matrix golden values", pass,
           "matrix error " + fmt(worst_matrix) + ", eigenvalue error " +
               fmt(worst_eig));
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
    const auto t0 = Clock::now();
    Prng prng(0xdecaf);
    double worst_rec = 0.0, worst_basis = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index ds = 1 + static_cast<Eigen::Index>(prng.next_u64() % 4);
        const Eigen::Index de = 2 + static_cast<Eigen::Index>(prng.next_u64() % 4);
        ClassicalUnitary cu = random_classical_unitary(ds, de, prng);
        worst_rec = std::max(worst_rec, cu.reconstruction_residual);
        BasisChangeReport rep2 =
            basis_change_invariance_check(cu, prng.haar_unitary(de - 1));
        worst_basis = std::max(
            worst_basis, std::max(rep2.a_residual,
                                  std::max(rep2.b_residual, rep2.u_residual)));
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst_rec <= 1e-9 && worst_basis <= 1e-9 && elapsed < 10.0;
    report(4, "branch reconstruction", pass,
           "reconstruction " + fmt(worst_rec) + ", basis change " +
               fmt(worst_basis) + ", " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
    Prng prng(0xfeed);
    double worst_exact = 0.0, worst_mc_ratio = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index ds = 2 + static_cast<Eigen::Index>(prng.next_u64() % 2);
        const Eigen::Index de = 2 + static_cast<Eigen::Index>(prng.next_u64() % 2);
        const int n = 1 + static_cast<int>(prng.next_u64() % 3);
        ClassicalUnitary cu = random_classical_unitary(ds, de, prng);
        CMatrix rho = random_density(prng, ds);

        CMatrix exact = iterate_channel(cu, rho, n);
        worst_exact = std::max(
            worst_exact, distance(full_tensor_evolution(cu, n, rho), exact));

        MonteCarloResult mc =
            monte_carlo_channel(cu, rho, n, 10000, prng.next_u64());
        for (Eigen::Index i = 0; i < ds; ++i)
            for (Eigen::Index j = 0; j < ds; ++j) {
                const double err = std::abs(mc.mean(i, j) - exact(i, j));
                worst_mc_ratio = std::max(
                    worst_mc_ratio, err / std::max(mc.stderr_abs(i, j), 1e-12));
            }
    }
    const bool pass = worst_exact <= 1e-10 && worst_mc_ratio <= 4.0;
    report(5, "channel three-way agreement", pass,
           "chain vs iterate " + fmt(worst_exact) + ", MC worst z " +
               fmt(worst_mc_ratio));
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
    const auto t0 = Clock::now();
    ClassicalUnitary cu = family_preset("physical-1d").builder(1e-3);
    const double ks = first_jump_ks(cu, 1e-3, 2, 10000, 0xa5a5);
    const double elapsed = seconds_since(t0);
    const bool pass = ks <= 0.02 && elapsed < 30.0;
    report(6, "first-jump exponential law", pass,
           "KS distance " + fmt(ks) + ", " + fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
    const auto t0 = Clock::now();
    HFamily fam = family_preset("dim3-brownian2");
    WeakStudy study = weak_convergence_study(
        fam, fam.model, 1.0, {4e-2, 1e-2, 2.5e-3}, 10000, 0xbead, 1e-3);
    const double elapsed = seconds_since(t0);
    std::string agg;
    for (std::size_t k = 0; k < study.aggregate_error.size(); ++k)
        agg += (k ? " > " : "") + fmt(study.aggregate_error[k]);
    const bool pass = study.monotone && elapsed < 300.0;
    report(7, "diffusive weak convergence", pass,
           "errors " + agg + ", order " + fmt(study.empirical_order) + ", " +
               fmt(elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 8
void criterion_8() {
    const std::vector<double> probes = {2.5e-2, 6.25e-3, 1.5625e-3,
                                        3.90625e-4};
    bool all = true;
    std::string detail;
    for (const std::string& name : family_preset_names()) {
        HFamily fam = family_preset(name);
        bool ok = false;
        double ratio = -1.0;
        try {
            LimitTensors est = estimate_limit_tensors(fam, probes);
            DriverSpec d = synthesize_driver(est, 1e-3);
            BracketReport rep = verify_brackets(d, est, 1.0, 1e-4, 1000, 0xcafe);
            ok = rep.passes;
            ratio = rep.worst_ratio;
        } catch (const std::exception&) {
            ok = false;
        }
        all = all && ok;
        if (!detail.empty()) detail += ", ";
        detail += name + (ok ? " ok" : " FAIL") +
                  (ratio >= 0 ? " (ratio " + fmt(ratio) + ")" : "");
    }
    report(8, "synthesized driver brackets", all, detail);
}

// ---------------------------------------------------------------- criterion 9
bool run_cli(const std::string& args) {
    const std::string cmd =
        std::string("OBWALK_OUT_DIR= \"") + OBWALK_CLI_PATH + "\" " + args;
    return std::system(cmd.c_str()) == 0;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_9() {
    bool pass = true;
    std::string detail;

    const std::string walk_flags =
        "walk simulate --preset dim2-example --steps 5 --trials 3 --seed 42 "
        "--no-timestamp --out ";
    const bool walk_ran = run_cli(walk_flags + "acceptance_walk_a.csv") &&
                          run_cli(walk_flags + "acceptance_walk_b.csv");
    const std::string wa = slurp("acceptance_walk_a.csv");
    const std::string wb = slurp("acceptance_walk_b.csv");
    const bool walk_ok = walk_ran && !wa.empty() && wa == wb;
    pass = pass && walk_ok;
    detail += "walk CSV " + std::to_string(wa.size()) + " bytes " +
              (walk_ok ? "identical" : "DIFFER");

    // The KS statistic at h = 0.01 sits near 0.06 (the geometric law is
    // still far from its exponential limit), so give the CLI a threshold
    // this configuration meets; the criterion is byte determinism.
    const std::string ks_flags =
        "limit converge --preset physical-1d --ks-first-jump --hs 0.01 "
        "--trials 200 --seed 7 --ks-threshold 0.1 --no-timestamp --out ";
    const bool ks_ran = run_cli(ks_flags + "acceptance_ks_a.csv") &&
                        run_cli(ks_flags + "acceptance_ks_b.csv");
    const std::string ka = slurp("acceptance_ks_a.csv");
    const std::string kb = slurp("acceptance_ks_b.csv");
    const bool ks_ok = ks_ran && !ka.empty() && ka == kb;
    pass = pass && ks_ok;
    detail += "; ks CSV " + std::to_string(ka.size()) + " bytes " +
              (ks_ok ? "identical" : "DIFFER");

    report(9, "CLI determinism", pass, detail);
}

}  // namespace

int main() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    if (g_failures == 0)
        std::printf("all 9 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", g_failures);
    return g_failures;
}
