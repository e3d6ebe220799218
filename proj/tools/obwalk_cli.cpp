// Command-line front-end: obtuse systems, their 3-tensors, classical unitary
// actions, repeated-interaction walks, and continuous-limit studies.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "obwalk/channel.hpp"
#include "obwalk/json_io.hpp"
#include "obwalk/limit.hpp"
#include "obwalk/numerics.hpp"
#include "obwalk/obtuse.hpp"
#include "obwalk/presets.hpp"
#include "obwalk/rng.hpp"
#include "obwalk/tensor3.hpp"
#include "obwalk/walk.hpp"

namespace {

using namespace obwalk;

std::string iso_timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

// Relative --out paths land in $OBWALK_OUT_DIR when it is set.
std::string resolve_out_path(const std::string& out) {
    if (out.empty() || out.front() == '/') return out;
    const char* dir = std::getenv("OBWALK_OUT_DIR");
    if (dir == nullptr || *dir == '\0') return out;
    return std::string(dir) + "/" + out;
}

void emit(const std::string& out, const std::string& content) {
    if (out.empty()) {
        std::fputs(content.c_str(), stdout);
        if (!content.empty() && content.back() != '\n')
            std::fputc('\n', stdout);
    } else {
        write_text_file(resolve_out_path(out), content);
    }
}

struct PresetFlags {
    std::string preset;
    double p = 0.5;
    double tau = 0.0;
    double h = 0.01;

    PresetOptions options() const { return PresetOptions{p, tau, h}; }
    void attach(CLI::App* cmd) {
        // The default help flag claims -h, which CLI11 treats as clashing
        // with the single-letter long option --h. Keep --help only.
        cmd->set_help_flag("--help", "print this help message and exit");
        cmd->add_option("--preset", preset, "built-in preset name");
        cmd->add_option("--p", p, "outcome-1 weight for dim2 presets");
        cmd->add_option("--tau", tau, "coordinate phase for dim2 presets");
        cmd->add_option("--h", h, "step size when freezing a family preset");
    }
};

ClassicalUnitary load_unitary(const std::string& file,
                              const PresetFlags& flags) {
    if (!flags.preset.empty())
        return unitary_preset(flags.preset, flags.options());
    if (file.empty())
        throw InputError("pass a classical-unitary JSON file or --preset");
    return classical_unitary_from_json(read_text_file(file));
}

HFamily load_family(const std::string& file, const PresetFlags& flags) {
    if (!flags.preset.empty())
        return family_preset(flags.preset, flags.options());
    if (file.empty()) throw InputError("pass a family JSON file or --preset");
    return family_from_json(read_text_file(file));
}

int run_obtuse_validate(const std::string& file) {
    ObtuseSystem parsed = obtuse_system_from_json(read_text_file(file));
    try {
        ObtuseSystem checked = validate_obtuse(parsed.vectors);
        std::string line = "valid obtuse system: N=" +
                           std::to_string(checked.n) + ", probabilities=[";
        for (std::size_t i = 0; i < checked.probabilities.size(); ++i) {
            if (i) line += ',';
            line += fmt10(checked.probabilities[i]);
        }
        line += "]\n";
        std::fputs(line.c_str(), stdout);
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "not an obtuse system: %s\n", e.what());
        return 1;
    }
    return 0;
}

int run_obtuse_from_probs(const std::vector<double>& probs,
                          const std::string& out) {
    emit(out, to_json_string(obtuse_from_probabilities(probs)));
    return 0;
}

int run_tensor_from_rv(const std::string& file, const std::string& out) {
    ObtuseSystem s = obtuse_system_from_json(read_text_file(file));
    emit(out, to_json_string(tensor_from_rv(rv_from_system(s))));
    return 0;
}

int run_tensor_check(const std::string& file, double tol, bool recover,
                     const std::string& out) {
    ThreeTensor t = tensor_from_json(read_text_file(file));
    SymmetryReport rep = verify_double_symmetry(t, tol);
    std::fprintf(stdout,
                 "symmetry residuals: zero_index=%.3e upper_pair=%.3e "
                 "contraction=%.3e conj_contraction=%.3e\n",
                 rep.zero_index, rep.upper_pair, rep.contraction,
                 rep.conj_contraction);
    if (!rep.passes(tol)) {
        std::fprintf(stderr, "tensor is not doubly symmetric at tol %.3e (%s)\n",
                     tol, rep.worst_family().c_str());
        return 1;
    }
    if (recover) {
        ObtuseRV rv = rv_from_tensor(t);
        emit(out, to_json_string(rv.system));
    }
    return 0;
}

int run_channel_decompose(const std::string& file, const PresetFlags& flags,
                          bool random, int dim_sys, int dim_env,
                          std::uint64_t seed, const std::string& out) {
    ClassicalUnitary cu;
    if (random) {
        if (!file.empty() || !flags.preset.empty())
            throw InputError("--random excludes a file and --preset");
        Prng prng(seed);
        cu = random_classical_unitary(dim_sys, dim_env, prng);
        std::fprintf(stderr, "seed=%llu\n",
                     static_cast<unsigned long long>(seed));
    } else {
        cu = load_unitary(file, flags);
    }
    emit(out, to_json_string(cu));
    std::fprintf(stderr, "reconstruction residual = %.3e\n",
                 cu.reconstruction_residual);
    return cu.reconstruction_residual <= 1e-9 ? 0 : 1;
}

int run_channel_check_equal(const std::string& file_a,
                            const std::string& file_b, double tol) {
    ClassicalUnitary a = classical_unitary_from_json(read_text_file(file_a));
    ClassicalUnitary b = classical_unitary_from_json(read_text_file(file_b));
    if (a.dim_sys != b.dim_sys)
        throw InputError("system dimensions differ; channels not comparable");
    auto ground = [](const ClassicalUnitary& cu) {
        CMatrix omega = CMatrix::Zero(cu.dim_env, cu.dim_env);
        omega(0, 0) = 1.0;
        return channel_from_unitary(cu.u_total, omega, cu.dim_sys,
                                    cu.dim_env);
    };
    const bool equal = channels_equal(ground(a), ground(b), tol);
    std::fprintf(stdout, "channels %s at tol %.3e\n",
                 equal ? "equal" : "differ", tol);
    return equal ? 0 : 1;
}

int run_channel_from_branches(const std::string& file,
                              const std::string& out) {
    ClassicalUnitary cu = classical_unitary_from_json(read_text_file(file));
    emit(out, to_json_string(cu));
    return 0;
}

int run_walk_simulate(const std::string& file, const PresetFlags& flags,
                      int steps, int trials, std::uint64_t seed,
                      const std::string& out, bool verify_oracle,
                      bool no_timestamp, bool terminal_only,
                      bool no_matrices) {
    if (steps < 0) throw InputError("--steps must be >= 0");
    if (trials < 1) throw InputError("--trials must be >= 1");
    ClassicalUnitary cu = load_unitary(file, flags);
    const int d = static_cast<int>(cu.dim_sys);

    std::string csv;
    csv += "# schema=v1\n";
    csv += "# seed=" + std::to_string(seed) + "\n";
    if (!no_timestamp) csv += "# generated=" + iso_timestamp() + "\n";

    if (verify_oracle) {
        if (steps > 3)
            throw InputError("--verify-oracle supports steps <= 3 only");
        const CMatrix rho = CMatrix::Identity(d, d) / static_cast<double>(d);
        const double residual = distance(full_tensor_evolution(cu, steps, rho),
                                         iterate_channel(cu, rho, steps));
        char line[64];
        std::snprintf(line, sizeof(line), "# oracle_residual=%.3e\n",
                      residual);
        csv += line;
        if (residual > 1e-10) {
            emit(out, csv);
            std::fprintf(stderr,
                         "oracle mismatch: chain evolution vs channel "
                         "iteration residual %.3e\n",
                         residual);
            return 1;
        }
    }

    csv += "trial,step,outcome";
    if (!no_matrices)
        for (int i = 1; i <= d; ++i)
            for (int j = 1; j <= d; ++j) {
                csv += ",V[" + std::to_string(i) + "][" + std::to_string(j) +
                       "].re";
                csv += ",V[" + std::to_string(i) + "][" + std::to_string(j) +
                       "].im";
            }
    csv += "\n";

    auto append_row = [&](int trial, int step, int outcome, const CMatrix& v) {
        csv += std::to_string(trial) + "," + std::to_string(step) + "," +
               std::to_string(outcome);
        if (!no_matrices)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) {
                    csv += ',';
                    csv += fmt10(v(i, j).real());
                    csv += ',';
                    csv += fmt10(v(i, j).imag());
                }
        csv += "\n";
    };

    for (int trial = 0; trial < trials; ++trial) {
        WalkTrajectory traj =
            simulate_walk(cu, steps, seed, static_cast<std::uint64_t>(trial),
                          !terminal_only);
        if (traj.terminal_only) {
            append_row(trial, steps,
                       steps > 0 ? traj.outcome_indices.back() : 0,
                       traj.terminal());
        } else {
            for (int k = 0; k < static_cast<int>(traj.unitaries.size()); ++k)
                append_row(
                    trial, k,
                    k > 0 ? traj.outcome_indices[static_cast<std::size_t>(k - 1)]
                          : 0,
                    traj.unitaries[static_cast<std::size_t>(k)]);
        }
    }
    emit(out, csv);
    return 0;
}

int run_limit_tensors(const std::string& file, const PresetFlags& flags,
                      std::vector<double> hs, const std::string& out) {
    HFamily fam = load_family(file, flags);
    if (hs.empty()) hs = default_probe_hs();
    LimitTensors lt = estimate_limit_tensors(fam, hs);
    emit(out, limit_tensors_to_json_string(lt));
    for (const auto& entry : lt.flagged)
        std::fprintf(stderr, "no convergence evidence for entry %s\n",
                     entry.c_str());
    return 0;
}

int run_limit_converge(const std::string& file, const PresetFlags& flags,
                       const std::string& model_file, double t,
                       std::vector<double> hs, int trials, std::uint64_t seed,
                       double dt, const std::string& out, bool ks_mode,
                       double ks_threshold, bool no_timestamp, int jobs) {
    if (trials < 1) throw InputError("--trials must be >= 1");
    HFamily fam = load_family(file, flags);
    if (hs.empty()) hs = {4e-2, 1e-2, 2.5e-3};

    std::string csv;
    csv += "# schema=v1\n";
    csv += "# seed=" + std::to_string(seed) + "\n";
    if (!no_timestamp) csv += "# generated=" + iso_timestamp() + "\n";

    if (ks_mode) {
        csv += "h,ks_statistic,threshold,pass\n";
        bool all_pass = true;
        for (double h : hs) {
            ClassicalUnitary cu = fam.builder(h);
            // Outcome 2 is the rare jump branch in the Poisson-type presets.
            const double ks = first_jump_ks(cu, h, 2, trials, seed);
            const bool pass = ks <= ks_threshold;
            all_pass = all_pass && pass;
            csv += fmt10(h);
            csv += ',';
            csv += fmt10(ks);
            csv += ',';
            csv += fmt10(ks_threshold);
            csv += ',';
            csv += pass ? '1' : '0';
            csv += '\n';
        }
        emit(out, csv);
        return all_pass ? 0 : 1;
    }

    SDEModel model;
    if (!model_file.empty()) {
        model = sde_model_from_json(read_text_file(model_file));
    } else if (fam.has_model) {
        model = fam.model;
    } else {
        throw InputError("family has no analytic limit model; pass --model");
    }

    WeakStudy study =
        weak_convergence_study(fam, model, t, hs, trials, seed, dt, jobs);
    csv += "h,observable,discrete_mean,sde_mean,abs_error,stderr\n";
    for (const auto& row : study.rows) {
        csv += fmt10(row.h);
        csv += ',';
        csv += row.observable;
        csv += ',';
        csv += fmt10(row.discrete_mean);
        csv += ',';
        csv += fmt10(row.sde_mean);
        csv += ',';
        csv += fmt10(row.abs_error);
        csv += ',';
        csv += fmt10(row.stderr_combined);
        csv += '\n';
    }
    for (std::size_t k = 0; k < study.hs.size(); ++k) {
        csv += "# aggregate h=" + fmt10(study.hs[k]) +
               " error=" + fmt10(study.aggregate_error[k]) +
               " sigma=" + fmt10(study.aggregate_sigma[k]) + "\n";
    }
    csv += std::string("# monotone=") + (study.monotone ? "true" : "false") +
           " order=" + fmt10(study.empirical_order) + "\n";
    emit(out, csv);
    return study.monotone ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "obtuse random variables, classical unitary actions, and the "
        "continuous limits of their repeated-interaction walks"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs,
                   "cap on worker threads for Monte-Carlo runs (0 = auto)");

    int rc = 0;

    // obtuse
    auto* obtuse_cmd =
        app.add_subcommand("obtuse", "validate or construct obtuse systems");
    obtuse_cmd->require_subcommand(1);
    {
        auto* validate =
            obtuse_cmd->add_subcommand("validate", "check a system JSON file");
        auto file = std::make_shared<std::string>();
        validate->add_option("file", *file, "obtuse system JSON")->required();
        validate->callback([file, &rc] { rc = run_obtuse_validate(*file); });

        auto* fromp = obtuse_cmd->add_subcommand(
            "from-probs", "build the canonical system for a probability law");
        auto probs = std::make_shared<std::vector<double>>();
        auto out = std::make_shared<std::string>();
        fromp->add_option("probs", *probs, "comma-separated probabilities")
            ->required()
            ->delimiter(',');
        fromp->add_option("--out", *out, "output path (default stdout)");
        fromp->callback(
            [probs, out, &rc] { rc = run_obtuse_from_probs(*probs, *out); });
    }

    // tensor3
    auto* tensor_cmd = app.add_subcommand(
        "tensor3", "3-tensors of obtuse random variables");
    tensor_cmd->require_subcommand(1);
    {
        auto* fromrv = tensor_cmd->add_subcommand(
            "from-rv", "third-moment tensor of a system's random variable");
        auto file = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        fromrv->add_option("file", *file, "obtuse system JSON")->required();
        fromrv->add_option("--out", *out, "output path (default stdout)");
        fromrv->callback(
            [file, out, &rc] { rc = run_tensor_from_rv(*file, *out); });

        auto* check = tensor_cmd->add_subcommand(
            "check", "verify the double-symmetry families");
        auto cfile = std::make_shared<std::string>();
        auto cout_path = std::make_shared<std::string>();
        auto tol = std::make_shared<double>(1e-11);
        auto recover = std::make_shared<bool>(false);
        check->add_option("file", *cfile, "tensor JSON")->required();
        check->add_option("--tol", *tol, "symmetry tolerance");
        check->add_flag("--recover", *recover,
                        "also diagonalize back to an obtuse system");
        check->add_option("--out", *cout_path, "output path (default stdout)");
        check->callback([cfile, tol, recover, cout_path, &rc] {
            rc = run_tensor_check(*cfile, *tol, *recover, *cout_path);
        });
    }

    // channel
    auto* channel_cmd = app.add_subcommand(
        "channel", "classical unitary actions and their channels");
    channel_cmd->require_subcommand(1);
    {
        auto* dec = channel_cmd->add_subcommand(
            "decompose",
            "extract p, coordinate values, A, B_j and the reconstruction");
        auto file = std::make_shared<std::string>();
        auto flags = std::make_shared<PresetFlags>();
        auto random = std::make_shared<bool>(false);
        auto dim_sys = std::make_shared<int>(2);
        auto dim_env = std::make_shared<int>(2);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out = std::make_shared<std::string>();
        dec->add_option("file", *file, "classical unitary JSON");
        flags->attach(dec);
        dec->add_flag("--random", *random, "decompose a random instance");
        dec->add_option("--dim-sys", *dim_sys, "system dimension (--random)");
        dec->add_option("--dim-env", *dim_env,
                        "environment dimension (--random)");
        dec->add_option("--seed", *seed, "RNG seed (--random)");
        dec->add_option("--out", *out, "output path (default stdout)");
        dec->callback([=, &rc] {
            rc = run_channel_decompose(*file, *flags, *random, *dim_sys,
                                       *dim_env, *seed, *out);
        });

        auto* eq = channel_cmd->add_subcommand(
            "check-equal", "compare the induced channels of two instances");
        auto fa = std::make_shared<std::string>();
        auto fb = std::make_shared<std::string>();
        auto tol = std::make_shared<double>(kStructuralTol);
        eq->add_option("a", *fa, "first classical unitary JSON")->required();
        eq->add_option("b", *fb, "second classical unitary JSON")->required();
        eq->add_option("--tol", *tol, "Choi-distance tolerance");
        eq->callback([fa, fb, tol, &rc] {
            rc = run_channel_check_equal(*fa, *fb, *tol);
        });

        auto* fb_cmd = channel_cmd->add_subcommand(
            "from-branches", "assemble an instance from branch data");
        auto bfile = std::make_shared<std::string>();
        auto bout = std::make_shared<std::string>();
        fb_cmd->add_option("file", *bfile, "branches JSON")->required();
        fb_cmd->add_option("--out", *bout, "output path (default stdout)");
        fb_cmd->callback([bfile, bout, &rc] {
            rc = run_channel_from_branches(*bfile, *bout);
        });
    }

    // walk
    auto* walk_cmd = app.add_subcommand(
        "walk", "repeated-interaction random walks on the unitary group");
    walk_cmd->require_subcommand(1);
    {
        auto* sim = walk_cmd->add_subcommand("simulate",
                                             "sample trajectories to CSV");
        auto file = std::make_shared<std::string>();
        auto flags = std::make_shared<PresetFlags>();
        auto steps = std::make_shared<int>(0);
        auto trials = std::make_shared<int>(1);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto out = std::make_shared<std::string>();
        auto verify = std::make_shared<bool>(false);
        auto no_ts = std::make_shared<bool>(false);
        auto term_only = std::make_shared<bool>(false);
        auto no_mat = std::make_shared<bool>(false);
        sim->add_option("file", *file, "classical unitary JSON");
        flags->attach(sim);
        sim->add_option("--steps", *steps, "walk length")->required();
        sim->add_option("--trials", *trials, "number of trajectories");
        sim->add_option("--seed", *seed, "master RNG seed");
        sim->add_option("--out", *out, "output CSV path (default stdout)");
        sim->add_flag("--verify-oracle", *verify,
                      "cross-check the chain evolution oracle (steps <= 3)");
        sim->add_flag("--no-timestamp", *no_ts,
                      "omit the generated-at header line");
        sim->add_flag("--terminal-only", *term_only,
                      "write only the endpoint row of each trajectory");
        sim->add_flag("--no-matrices", *no_mat,
                      "omit the flattened unitary columns");
        sim->callback([=, &rc] {
            rc = run_walk_simulate(*file, *flags, *steps, *trials, *seed,
                                   *out, *verify, *no_ts, *term_only,
                                   *no_mat);
        });
    }

    // limit
    auto* limit_cmd = app.add_subcommand(
        "limit", "small-step limits: tensors, drivers, convergence");
    limit_cmd->require_subcommand(1);
    {
        auto* tens = limit_cmd->add_subcommand(
            "tensors", "extrapolate the limit tensors of a family");
        auto file = std::make_shared<std::string>();
        auto flags = std::make_shared<PresetFlags>();
        auto hs = std::make_shared<std::vector<double>>();
        auto out = std::make_shared<std::string>();
        tens->add_option("file", *file, "family JSON");
        flags->attach(tens);
        tens->add_option("--hs", *hs, "comma-separated probe step sizes")
            ->delimiter(',');
        tens->add_option("--out", *out, "output path (default stdout)");
        tens->callback([=, &rc] {
            rc = run_limit_tensors(*file, *flags, *hs, *out);
        });

        auto* conv = limit_cmd->add_subcommand(
            "converge", "weak-convergence study against the limit equation");
        auto cfile = std::make_shared<std::string>();
        auto cflags = std::make_shared<PresetFlags>();
        auto model = std::make_shared<std::string>();
        auto t = std::make_shared<double>(1.0);
        auto chs = std::make_shared<std::vector<double>>();
        auto trials = std::make_shared<int>(1000);
        auto seed = std::make_shared<std::uint64_t>(0);
        auto dt = std::make_shared<double>(1e-3);
        auto conv_out = std::make_shared<std::string>();
        auto ks = std::make_shared<bool>(false);
        auto ks_thr = std::make_shared<double>(0.02);
        auto no_ts = std::make_shared<bool>(false);
        conv->add_option("file", *cfile, "family JSON");
        cflags->attach(conv);
        conv->add_option("--model", *model, "limit SDE model JSON override");
        conv->add_option("--t", *t, "comparison time");
        conv->add_option("--hs", *chs, "comma-separated step sizes")
            ->delimiter(',');
        conv->add_option("--trials", *trials, "Monte-Carlo trials per side");
        conv->add_option("--seed", *seed, "master RNG seed");
        conv->add_option("--dt", *dt, "SDE integrator step");
        conv->add_option("--out", *conv_out,
                         "output CSV path (default stdout)");
        conv->add_flag("--ks-first-jump", *ks,
                       "instead compare h-scaled first-jump times to Exp(1)");
        conv->add_option("--ks-threshold", *ks_thr,
                         "KS acceptance threshold");
        conv->add_flag("--no-timestamp", *no_ts,
                       "omit the generated-at header line");
        conv->callback([=, &rc, &jobs] {
            rc = run_limit_converge(*cfile, *cflags, *model, *t, *chs,
                                    *trials, *seed, *dt, *conv_out, *ks,
                                    *ks_thr, *no_ts, jobs);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return 2;
    } catch (const PreconditionError& e) {
        std::fprintf(stderr, "precondition violated: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return rc;
}
