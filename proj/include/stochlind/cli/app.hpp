#pragma once

// Subcommands: check, ode, sde, derive, choi.
//
// Exit codes: 0 success, 1 usage, 2 model invalid, 3 numerical failure,
// 4 derivation mismatch. Output files are written only on success.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stochlind/channels.hpp"
#include "stochlind/cli/csv.hpp"
#include "stochlind/cli/model_io.hpp"
#include "stochlind/errors.hpp"
#include "stochlind/ito_engine.hpp"
#include "stochlind/lindblad.hpp"
#include "stochlind/ode.hpp"
#include "stochlind/unraveling.hpp"

namespace stochlind::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitModelInvalid = 2,
    kExitNumerical = 3,
    kExitDerivationMismatch = 4,
};

inline constexpr double kDerivationTol = 1e-10;
inline constexpr double kChoiTol = 1e-10;

struct RunConfig {
    double t_final = 1.0;
    double dt = 1e-3;
    std::uint64_t trajectories = 1000;
    std::uint64_t seed = 0;
    std::size_t record_every = 10;
    StepperKind stepper = StepperKind::euler;
    std::string observables;  // optional path
    unsigned workers = 0;
    std::string out;  // empty: standard output
};

namespace detail {

inline void emit(const std::string& path, const std::string& text, std::ostream& out)
{
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f || !(f << text) || !(f.flush())) {
        throw ConfigError("cannot write " + path);
    }
}

/// Runs `body` and maps exceptions to exit codes with a one-line message.
inline int guarded(std::ostream& err, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ModelFormatError& e) {
        err << "error: model: " << e.what() << "\n";
        return kExitModelInvalid;
    } catch (const ModelError& e) {
        err << "error: model: " << e.what() << "\n";
        return kExitModelInvalid;
    } catch (const DimensionError& e) {
        err << "error: model: " << e.what() << "\n";
        return kExitModelInvalid;
    } catch (const NumericalError& e) {
        err << "error: numerical: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
}

inline ModelFile load_and_report(const std::string& model, std::ostream& err)
{
    ModelFile mf = load_model(model);
    err << "model " << mf.source << "\n" << validate_model(mf.model).describe();
    return mf;
}

inline std::vector<HermitianOperator> observables_for(const RunConfig& cfg, Index dim)
{
    if (cfg.observables.empty()) {
        return {};
    }
    return load_observables(cfg.observables, dim);
}

/// Deterministic mixed test states for derive: rho = G G^dagger / Tr.
inline std::vector<ComplexMatrix> derivation_states(const ModelFile& mf)
{
    const Index d = mf.model.dim();
    std::vector<ComplexMatrix> states{mf.initial_state.matrix(), DensityMatrix::maximally_mixed(d).matrix()};
    std::mt19937_64 gen(20260101);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 4; ++k) {
        ComplexMatrix g(d, d);
        for (Index i = 0; i < g.size(); ++i) {
            g(i) = Complex(normal(gen), normal(gen));
        }
        ComplexMatrix rho = g * g.adjoint();
        states.push_back(rho / rho.trace().real());
    }
    return states;
}

}  // namespace detail

inline int cmd_check(const std::string& model, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        const ModelFile mf = load_model(model);
        const ValidationReport rep = validate_model(mf.model);
        out << "model " << mf.source << " (dim " << mf.model.dim() << ", " << mf.model.noise_count()
            << " noise" << (mf.model.noise_count() == 1 ? "" : "s") << ")\n"
            << rep.describe();
        return static_cast<int>(kExitOk);
    });
}

inline int cmd_ode(const std::string& model, const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        const ModelFile mf = detail::load_and_report(model, err);
        const auto obs = detail::observables_for(cfg, mf.model.dim());
        const OdeTrajectory traj = integrate_ode(mf.model, mf.initial_state, cfg.t_final, cfg.dt, cfg.record_every);
        std::ostringstream csv;
        write_state_header(csv, mf.model.dim(), {false, obs.size()});
        for (std::size_t s = 0; s < traj.times.size(); ++s) {
            write_state_row(csv, traj.times[s], traj.states[s], nullptr, obs);
        }
        err << "max trace drift: " << traj.max_trace_drift << "\n";
        detail::emit(cfg.out, csv.str(), out);
        return static_cast<int>(kExitOk);
    });
}

inline int cmd_sde(const std::string& model, const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        const ModelFile mf = detail::load_and_report(model, err);
        const auto obs = detail::observables_for(cfg, mf.model.dim());
        EnsembleConfig ec;
        ec.t_final = cfg.t_final;
        ec.dt = cfg.dt;
        ec.trajectories = cfg.trajectories;
        ec.seed = cfg.seed;
        ec.record_every = cfg.record_every;
        ec.stepper = cfg.stepper;
        ec.workers = cfg.workers;
        const EnsembleResult res = run_ensemble(mf.model, mf.initial_state, ec);
        for (const auto& w : res.diagnostics.warnings) {
            err << "warning: " << w << "\n";
        }
        std::ostringstream csv;
        write_state_header(csv, mf.model.dim(), {true, obs.size()});
        for (std::size_t s = 0; s < res.stats.times.size(); ++s) {
            write_state_row(csv, res.stats.times[s], res.stats.mean_state[s], &res.stats.standard_error[s], obs);
        }
        err << "trajectories: " << res.stats.trajectory_count << "  seed: " << res.stats.seed << "\n"
            << "per-trajectory trace range: [" << format_number(res.diagnostics.trace_min) << ", "
            << format_number(res.diagnostics.trace_max) << "]\n"
            << "worst per-trajectory min eigenvalue: " << format_number(res.diagnostics.min_eigenvalue) << "\n";
        detail::emit(cfg.out, csv.str(), out);
        return static_cast<int>(kExitOk);
    });
}

/// Expands sum_n A_n rho A_n^dagger in the Ito algebra and compares the
/// coefficients with the direct formulas on a set of test states.
inline int cmd_derive(const std::string& model, const std::string& out_path, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        const ModelFile mf = detail::load_and_report(model, err);
        const LindbladModel& m = mf.model;
        std::ostringstream rep;
        rep.precision(6);
        double worst_drift = 0.0;
        double worst_noise = 0.0;
        double worst_const = 0.0;
        double worst_trace = 0.0;
        const auto states = detail::derivation_states(mf);
        for (std::size_t s = 0; s < states.size(); ++s) {
            const ComplexMatrix& rho = states[s];
            const StochasticEvolution ev = derive_stochastic_evolution(m, rho);
            const double drift_err = (ev.drift_coeff - lindblad_rhs(m, rho)).norm();
            double noise_err = 0.0;
            for (Index n = 0; n < m.noise_count(); ++n) {
                const ComplexMatrix& v = m.lindblad_op(n);
                const ComplexMatrix expect = m.weight(n) * (v * rho + rho * v.adjoint());
                noise_err = std::max(noise_err, (ev.noise_coeffs[static_cast<std::size_t>(n)] - expect).norm());
            }
            worst_drift = std::max(worst_drift, drift_err);
            worst_noise = std::max(worst_noise, noise_err);
            worst_const = std::max(worst_const, ev.constant_residual.norm());
            worst_trace = std::max(worst_trace, ev.trace_residual);
            rep << "state " << s << ": |dt coeff - L(rho)| = " << drift_err << ", max_n |dW coeff - d_n(v rho + rho v^+)| = "
                << noise_err << ", |Tr dt coeff| = " << ev.trace_residual << "\n";
        }
        const StochasticEvolution ev0 = derive_stochastic_evolution(m, mf.initial_state.matrix());
        json coeffs;
        coeffs["state"] = matrix_literal(mf.initial_state.matrix());
        coeffs["dt"] = matrix_literal(ev0.drift_coeff);
        coeffs["dW"] = json::array();
        for (const auto& c : ev0.noise_coeffs) {
            coeffs["dW"].push_back(matrix_literal(c));
        }
        rep << "coefficients of d rho at the initial state:\n" << coeffs.dump(2) << "\n";
        rep << "max |dt coeff - L(rho)|: " << worst_drift << "\n"
            << "max |dW coeff - d_n(v rho + rho v^+)|: " << worst_noise << "\n"
            << "max |(sum d_n^2 - 1) rho|: " << worst_const << "\n"
            << "max |Tr dt coeff|: " << worst_trace << "\n";
        if (worst_drift > kDerivationTol || worst_noise > kDerivationTol || worst_const > kDerivationTol) {
            err << "error: derivation: symbolic expansion disagrees with the direct formulas beyond "
                << kDerivationTol << "\n";
            return static_cast<int>(kExitDerivationMismatch);
        }
        rep << "derivation reproduced within " << kDerivationTol << "\n";
        detail::emit(out_path, rep.str(), out);
        return static_cast<int>(kExitOk);
    });
}

/// Choi spectra of the infinitesimal channel at dW = 0, +sqrt(dt), -sqrt(dt).
inline int cmd_choi(const std::string& model, double dt, const std::string& out_path, std::ostream& out,
                    std::ostream& err)
{
    return detail::guarded(err, [&] {
        if (!(dt > 0.0)) {
            throw ConfigError("--dt must be positive");
        }
        const ModelFile mf = detail::load_and_report(model, err);
        const auto noises = static_cast<std::size_t>(mf.model.noise_count());
        const double s = std::sqrt(dt);
        const std::vector<std::pair<std::string, double>> cases{{"zero", 0.0}, {"plus", s}, {"minus", -s}};
        std::ostringstream csv;
        csv << "case,index,eigenvalue\n";
        double lowest = std::numeric_limits<double>::infinity();
        for (const auto& [label, w] : cases) {
            const std::vector<double> dw(noises, w);
            const KrausChannel ch = build_infinitesimal_kraus(mf.model, dt, dw);
            const RealVector lam = eig_hermitian(choi_of(ch).matrix()).eigenvalues;
            for (Index i = 0; i < lam.size(); ++i) {
                csv << label << "," << i << "," << format_number(lam(i)) << "\n";
            }
            lowest = std::min(lowest, lam(0));
            err << "case " << label << ": trace-preservation residual "
                << format_number(is_trace_preserving(ch, 0.0).residual) << "\n";
        }
        if (lowest < -kChoiTol) {
            throw NumericalError("Choi matrix has eigenvalue " + format_number(lowest) + " below -" +
                                 format_number(kChoiTol));
        }
        detail::emit(out_path, csv.str(), out);
        return static_cast<int>(kExitOk);
    });
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Lindblad evolution, Ito derivation checks and stochastic unraveling"};
    app.require_subcommand(1);

    std::string model;
    RunConfig cfg;
    std::string stepper = "euler";

    auto add_model = [&](CLI::App* sub) {
        sub->add_option("--model", model, "model file, preset:NAME, or a preset name")->required();
    };
    auto add_out = [&](CLI::App* sub) { sub->add_option("--out", cfg.out, "output path (default: stdout)"); };
    auto add_run = [&](CLI::App* sub) {
        sub->add_option("--t-final", cfg.t_final, "final time")->capture_default_str();
        sub->add_option("--dt", cfg.dt, "time step")->capture_default_str();
        sub->add_option("--record-every", cfg.record_every, "record every N steps")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--observables", cfg.observables, "JSON array of Hermitian matrices");
    };

    CLI::App* check = app.add_subcommand("check", "validate a model and print the report");
    add_model(check);

    CLI::App* ode = app.add_subcommand("ode", "integrate the Lindblad equation (RK4)");
    add_model(ode);
    add_run(ode);
    add_out(ode);

    CLI::App* sde = app.add_subcommand("sde", "Monte Carlo ensemble of stochastic trajectories");
    add_model(sde);
    add_run(sde);
    add_out(sde);
    sde->add_option("--trajectories", cfg.trajectories, "number of trajectories")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sde->add_option("--seed", cfg.seed, "64-bit seed")->capture_default_str();
    sde->add_option("--stepper", stepper, "euler or exact-unitary")
        ->capture_default_str()
        ->check(CLI::IsMember({"euler", "exact-unitary", "exact_unitary"}));
    sde->add_option("--workers", cfg.workers, "worker threads (0: all cores); output does not depend on it")
        ->capture_default_str();

    CLI::App* derive = app.add_subcommand("derive", "check the Ito expansion against the Lindblad form");
    add_model(derive);
    add_out(derive);

    double choi_dt = 1e-3;
    CLI::App* choi = app.add_subcommand("choi", "Choi spectrum of the infinitesimal Kraus channel");
    add_model(choi);
    add_out(choi);
    choi->add_option("--dt", choi_dt, "time step")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return static_cast<int>(kExitOk);
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return static_cast<int>(kExitOk);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    cfg.stepper = stepper == "euler" ? StepperKind::euler : StepperKind::exact_unitary;

    if (check->parsed()) {
        return cmd_check(model, out, err);
    }
    if (ode->parsed()) {
        return cmd_ode(model, cfg, out, err);
    }
    if (sde->parsed()) {
        return cmd_sde(model, cfg, out, err);
    }
    if (derive->parsed()) {
        return cmd_derive(model, cfg.out, out, err);
    }
    return cmd_choi(model, choi_dt, cfg.out, out, err);
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    std::vector<const char*> argv{"stochlind"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace stochlind::cli
