// fluctuon.cpp — batch front end: spectrum | correlate | decay | validate | fit | br-rates

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fluctuon/config.hpp"
#include "fluctuon/dephasing.hpp"
#include "fluctuon/experiment_fit.hpp"
#include "fluctuon/noise_model.hpp"
#include "fluctuon/qubit_dynamics.hpp"
#include "fluctuon/rtp_sim.hpp"

namespace {

using fluctuon::json;
using ojson = nlohmann::ordered_json;

struct CommonArgs {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed_override;
    int threads = 0; // 0: resolve from env or default 1
};

int resolve_threads(const CommonArgs& args) {
    if (args.threads > 0) return args.threads;
    if (const char* env = std::getenv("FLUCTUON_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

std::uint64_t resolve_seed(const CommonArgs& args, const json& cfg) {
    if (args.seed_override) return *args.seed_override;
    return cfg.value("seed", std::uint64_t{20240801});
}

// Output goes to --out, then to the config's "output", then to stdout.
class OutputTarget {
  public:
    OutputTarget(const CommonArgs& args, const json& cfg) {
        path_ = !args.out_path.empty() ? args.out_path : cfg.value("output", std::string{});
        if (!path_.empty()) {
            file_.open(path_);
            if (!file_) throw fluctuon::IoError("cannot open output file: " + path_);
        }
    }
    std::ostream& stream() { return path_.empty() ? std::cout : file_; }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ofstream file_;
};

json require_block(const json& cfg, const char* key, const char* why) {
    if (!cfg.contains(key))
        throw fluctuon::ConfigError(std::string("config needs '") + key + "': " + why);
    return cfg[key];
}

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(const CommonArgs& args) {
    using namespace fluctuon;
    const json cfg = load_config_file(args.config_path);

    // zero-amplitude bands are legal here and emit an all-zero column
    struct Column {
        int n;
        std::optional<NoiseBand> band;
    };
    std::vector<Column> columns;
    if (cfg.contains("noise_model")) {
        const auto& jm = cfg["noise_model"];
        if (!jm.contains("bands") || !jm["bands"].is_array() || jm["bands"].empty())
            throw ConfigError("noise_model needs a non-empty 'bands' array");
        for (const auto& jb : jm["bands"]) {
            if (jb.value("sigma", -1.0) == 0.0)
                columns.push_back({jb.value("n", 1), std::nullopt});
            else
                columns.push_back({jb.at("n").get<int>(), band_from_json(jb)});
        }
    } else {
        const ResolvedNoise noise = resolve_noise(cfg);
        if (!noise.model)
            throw ConfigError("spectrum needs band-level noise (preset with cutoffs or noise_model)");
        for (const auto& band : noise.model->bands) columns.push_back({band.n, band});
    }
    const auto f_grid = grid_from_json(
        cfg.contains("f_grid") ? cfg["f_grid"]
                               : json{{"start", 1e-7}, {"stop", 10.0}, {"points", 200}, {"log", true}});

    const NoiseBand* one_over_f = nullptr;
    for (const auto& col : columns)
        if (col.band && col.n == 1) { one_over_f = &*col.band; break; }

    OutputTarget out(args, cfg);
    auto& os = out.stream();
    os.precision(17);
    os << "# fluctuon spectrum\n# config-hash: " << config_hash_hex(cfg) << "\n";
    os << "f_mhz";
    for (std::size_t i = 0; i < columns.size(); ++i) os << ",s" << columns[i].n << "_band" << i;
    os << ",s_total,one_over_f_ref\n";
    for (double f : f_grid) {
        const double omega = 2.0 * M_PI * f;
        double total = 0.0;
        os << f;
        for (const auto& col : columns) {
            const double s = col.band ? spectral_density(*col.band, omega) : 0.0;
            total += s;
            os << ',' << s;
        }
        double ref = 0.0;
        if (one_over_f) {
            const double amp = one_over_f->sigma * one_over_f->sigma /
                               (2.0 * std::log(one_over_f->gamma_hi / one_over_f->gamma_lo));
            ref = amp / omega;
        }
        os << ',' << total << ',' << ref << '\n';
    }
    return 0;
}

// --------------------------------------------------------------- correlate

int cmd_correlate(const CommonArgs& args) {
    using namespace fluctuon;
    const json cfg = load_config_file(args.config_path);
    const ResolvedNoise noise = resolve_noise(cfg);
    if (!noise.model)
        throw ConfigError("correlate needs band-level noise (preset with cutoffs or noise_model)");
    const auto tau_grid = grid_from_json(
        cfg.contains("tau_grid") ? cfg["tau_grid"] : json{{"stop", 5.0}, {"points", 101}});

    OutputTarget out(args, cfg);
    auto& os = out.stream();
    os.precision(17);
    os << "# fluctuon correlate\n# config-hash: " << config_hash_hex(cfg) << "\n";
    os << "tau_us";
    for (std::size_t i = 0; i < noise.model->bands.size(); ++i)
        os << ",chi" << noise.model->bands[i].n << "_band" << i;
    os << ",chi_total\n";
    for (double tau : tau_grid) {
        os << tau;
        double total = 0.0;
        for (const auto& band : noise.model->bands) {
            const double chi = correlation(band, tau);
            total += chi;
            os << ',' << chi;
        }
        os << ',' << total << '\n';
    }
    return 0;
}

// ------------------------------------------------------------------- decay

int cmd_decay(const CommonArgs& args) {
    using namespace fluctuon;
    const json cfg = load_config_file(args.config_path);
    const ResolvedNoise noise = resolve_noise(cfg);
    const Protocol protocol = protocol_from_string(cfg.value("protocol", "echo"));
    const auto t_grid = grid_from_json(require_block(cfg, "t_grid", "time grid for the curve"));
    const double d_z = cfg.contains("coupling") ? cfg["coupling"].value("d_z", 1.0) : 1.0;
    const double omega = cfg.contains("coupling") ? cfg["coupling"].value("omega", 0.0) : 0.0;
    const std::uint64_t seed = resolve_seed(args, cfg);
    const int threads = resolve_threads(args);

    std::vector<std::string> methods =
        cfg.contains("methods") ? cfg["methods"].get<std::vector<std::string>>()
                                : std::vector<std::string>{"two-fluctuator"};
    if (methods.empty()) throw ConfigError("decay: 'methods' must be non-empty");

    auto envelopes_product = [&](Protocol prot) {
        DecayCurve curve;
        curve.method = "two-fluctuator";
        curve.t = t_grid;
        curve.value.reserve(t_grid.size());
        for (double t : t_grid) {
            double product = 1.0;
            for (const auto& eff : noise.effective) {
                const double v = std::abs(d_z) * eff.a_star;
                product *= prot == Protocol::fid ? phi_fid(eff.gamma_star, v, t)
                                                 : phi_echo(eff.gamma_star, v, t);
            }
            curve.value.emplace_back(product, 0.0);
        }
        return curve;
    };

    std::vector<DecayCurve> curves;
    for (const auto& method : methods) {
        if (method == "two-fluctuator") {
            if (noise.effective.empty())
                throw ConfigError("decay method two-fluctuator needs effective fluctuators");
            curves.push_back(envelopes_product(protocol));
        } else if (method == "gaussian" || method == "filter-function") {
            if (!noise.model)
                throw ConfigError("decay method " + method + " needs band-level noise");
            const DephasingProblem problem{*noise.model, d_z, protocol};
            curves.push_back(method == "gaussian" ? gaussian_envelope(problem, t_grid)
                                                  : filter_function_envelope(problem, t_grid));
        } else if (method == "ode") {
            if (noise.effective.empty())
                throw ConfigError("decay method ode needs effective fluctuators");
            EffectiveFluctuator eff1 = noise.effective[0];
            EffectiveFluctuator eff2 =
                noise.effective.size() > 1 ? noise.effective[1] : EffectiveFluctuator{0.0, 1.0};
            auto result = ode_dephasing_envelope(
                eff1, eff2, d_z, [omega](double) { return omega; }, protocol, t_grid);
            curves.push_back(std::move(result.curve));
        } else if (method == "monte-carlo") {
            EnsembleSpec spec;
            const json mc = cfg.value("monte_carlo", json::object());
            spec.trajectories = mc.value("trajectories", 5000);
            spec.seed = seed;
            spec.horizon = mc.value("horizon", t_grid.back() > 0 ? t_grid.back() : 1.0);
            if (noise.model) {
                const int per_band = mc.value("fluctuators_per_band", 128);
                for (const auto& band : noise.model->bands)
                    spec.resampled_bands.push_back({band, per_band});
            } else {
                for (const auto& eff : noise.effective)
                    spec.fluctuators.push_back({eff.a_star, eff.gamma_star});
            }
            curves.push_back(empirical_envelope(spec, protocol, d_z, t_grid, threads));
        } else if (method == "gaussian-decay" || method == "exponential-decay") {
            double rate;
            if (protocol == Protocol::echo && std::isfinite(noise.echo_rate))
                rate = noise.echo_rate;
            else if (protocol == Protocol::fid && std::isfinite(noise.v1) &&
                     std::isfinite(noise.v2))
                rate = fid_rate_gaussian(noise.v1, noise.v2);
            else
                throw ConfigError("decay method " + method +
                                  " needs preset rates (echo_rate or v1/v2)");
            DecayCurve curve;
            curve.method = method;
            curve.t = t_grid;
            for (double t : t_grid)
                curve.value.emplace_back(method == "gaussian-decay"
                                             ? std::exp(-(rate * t) * (rate * t))
                                             : std::exp(-rate * t),
                                         0.0);
            curves.push_back(std::move(curve));
        } else {
            throw ConfigError("unknown decay method: '" + method +
                              "' (gaussian | two-fluctuator | ode | filter-function | "
                              "monte-carlo | gaussian-decay | exponential-decay)");
        }
    }

    OutputTarget out(args, cfg);
    auto& os = out.stream();
    os.precision(17);
    os << "# fluctuon decay\n# config-hash: " << config_hash_hex(cfg) << "\n";
    os << "# protocol: " << to_string(protocol) << "\n# methods:";
    for (const auto& m : methods) os << ' ' << m;
    os << "\nt";
    for (const auto& curve : curves) {
        os << ',' << curve.method << "_re," << curve.method << "_im," << curve.method << "_abs";
        if (curve.has_stderr()) os << ',' << curve.method << "_stderr";
    }
    os << '\n';
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        os << t_grid[i];
        for (const auto& curve : curves) {
            os << ',' << curve.value[i].real() << ',' << curve.value[i].imag() << ','
               << std::abs(curve.value[i]);
            if (curve.has_stderr())
                os << ',' << std::hypot(curve.stderr_re[i], curve.stderr_im[i]);
        }
        os << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- validate

int cmd_validate(const CommonArgs& args) {
    using namespace fluctuon;
    const json cfg = load_config_file(args.config_path);
    const std::uint64_t seed = resolve_seed(args, cfg);
    const int threads = resolve_threads(args);
    const int trajectories = cfg.value("trajectories", 10000);
    if (trajectories < 1) throw ConfigError("validate: trajectories must be >= 1");
    const std::vector<std::string> checks =
        cfg.contains("checks")
            ? cfg["checks"].get<std::vector<std::string>>()
            : std::vector<std::string>{"fid-single", "echo-single", "band-correlation"};

    const double fl_gamma = cfg.contains("fluctuator") ? cfg["fluctuator"].value("gamma", 1.0) : 1.0;
    const double fl_v = cfg.contains("fluctuator") ? cfg["fluctuator"].value("v", 1.0) : 1.0;

    ojson report;
    report["command"] = "validate";
    report["config_hash"] = config_hash_hex(cfg);
    report["seed"] = seed;
    report["trajectories"] = trajectories;
    report["checks"] = ojson::array();
    bool all_pass = true;

    for (const auto& name : checks) {
        ojson entry;
        entry["name"] = name;
        if (name == "fid-single" || name == "echo-single") {
            const Protocol protocol = name == "fid-single" ? Protocol::fid : Protocol::echo;
            std::vector<double> grid;
            for (int i = 0; i <= 60; ++i) grid.push_back(3.0 * i / 60.0);
            EnsembleSpec spec;
            spec.fluctuators = {{fl_v, fl_gamma}};
            spec.trajectories = trajectories;
            spec.seed = seed;
            spec.horizon = grid.back();
            const auto mc = empirical_envelope(spec, protocol, 1.0, grid, threads);
            double max_dev = 0.0, max_pull = 0.0;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double exact = protocol == Protocol::fid
                                         ? phi_fid(fl_gamma, fl_v, grid[i])
                                         : phi_echo(fl_gamma, fl_v, grid[i]);
                const double dev = std::abs(mc.value[i].real() - exact);
                max_dev = std::max(max_dev, dev);
                if (mc.stderr_re[i] > 0.0) max_pull = std::max(max_pull, dev / mc.stderr_re[i]);
            }
            entry["max_abs_dev"] = max_dev;
            entry["max_dev_over_se"] = max_pull;
            entry["pass"] = max_pull <= 3.0;
        } else if (name == "band-correlation") {
            const NoiseBand band(2, 1.0, 0.5, 4.25);
            EnsembleSpec spec;
            spec.resampled_bands.push_back({band, 200});
            spec.trajectories = std::min(trajectories, 256);
            spec.seed = seed;
            spec.horizon = 100.0;
            std::vector<double> taus;
            for (int i = 0; i <= 10; ++i) taus.push_back(0.2 * i);
            const auto est = empirical_correlation(spec, taus, threads);
            double max_pull = 0.0;
            for (std::size_t i = 0; i < taus.size(); ++i) {
                const double exact = correlation(band, taus[i]);
                if (est[i].std_error > 0.0)
                    max_pull =
                        std::max(max_pull, std::abs(est[i].value - exact) / est[i].std_error);
            }
            entry["max_dev_over_se"] = max_pull;
            entry["pass"] = max_pull <= 3.0;
        } else if (name == "gaussian-limit") {
            std::vector<double> grid;
            for (int i = 0; i <= 40; ++i) grid.push_back(5.0 * i / 40.0);
            auto max_dev_for = [&](int n_fluct) {
                EnsembleSpec spec;
                spec.trajectories = trajectories;
                spec.seed = seed + n_fluct;
                spec.horizon = grid.back();
                for (int i = 0; i < n_fluct; ++i)
                    spec.fluctuators.push_back({1.0 / std::sqrt(double(n_fluct)), 1.0});
                const auto mc = empirical_envelope(spec, Protocol::fid, 1.0, grid, threads);
                double max_dev = 0.0;
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    const double t = grid[i];
                    const double ou = std::exp(-0.25 * (2.0 * t - 1.0 + std::exp(-2.0 * t)));
                    max_dev = std::max(max_dev, std::abs(mc.value[i].real() - ou));
                }
                return max_dev;
            };
            const double dev1 = max_dev_for(1);
            const double dev64 = max_dev_for(64);
            entry["max_abs_dev_n1"] = dev1;
            entry["max_abs_dev_n64"] = dev64;
            entry["pass"] = dev64 < dev1;
        } else {
            throw ConfigError("unknown validate check: '" + name + "'");
        }
        all_pass = all_pass && entry["pass"].get<bool>();
        report["checks"].push_back(entry);
    }
    report["all_pass"] = all_pass;

    OutputTarget out(args, cfg);
    out.stream() << report.dump(2) << '\n';
    if (!out.path().empty()) {
        for (const auto& entry : report["checks"])
            std::cout << (entry["pass"].get<bool>() ? "PASS " : "FAIL ")
                      << entry["name"].get<std::string>() << '\n';
    }
    return all_pass ? 0 : static_cast<int>(ExitCode::accuracy);
}

// --------------------------------------------------------------------- fit

int cmd_fit(const CommonArgs& args) {
    using namespace fluctuon;
    const json cfg = load_config_file(args.config_path);
    const std::string dataset_path =
        require_block(cfg, "dataset", "path to the measured decay CSV").get<std::string>();
    ExperimentDataset dataset = load_dataset(dataset_path);
    if (cfg.contains("protocol")) dataset.protocol = protocol_from_string(cfg["protocol"]);

    const json slow_cfg = require_block(cfg, "slow", "fixed slow fluctuator {gamma, v}");
    const EffectiveFluctuator slow{slow_cfg.at("v").get<double>(),
                                   slow_cfg.at("gamma").get<double>()};
    const double gamma_c = require_block(cfg, "gamma_c", "fast-band lower cutoff").get<double>();

    FitBounds bounds;
    if (cfg.contains("bounds")) {
        const auto& jb = cfg["bounds"];
        if (jb.contains("v2")) {
            bounds.v2_lo = jb["v2"].at(0).get<double>();
            bounds.v2_hi = jb["v2"].at(1).get<double>();
        }
        if (jb.contains("gamma_0")) {
            bounds.gamma0_lo_offset =
                std::max(1e-6, jb["gamma_0"].at(0).get<double>() - gamma_c);
            bounds.gamma0_hi = jb["gamma_0"].at(1).get<double>();
        }
    }

    const FitResult fit = fit_fast_fluctuator(dataset, slow, gamma_c, bounds);

    ojson report;
    report["command"] = "fit";
    report["config_hash"] = config_hash_hex(cfg);
    report["dataset"] = dataset_path;
    report["v2"] = fit.v2;
    report["gamma_0"] = fit.gamma_0;
    report["gamma_2"] = fit.gamma_2;
    report["sse"] = fit.sse;
    report["iterations"] = fit.iterations;
    const double rate_fid = fid_rate_gaussian(slow.a_star, fit.v2);
    double rate_echo = std::numeric_limits<double>::quiet_NaN();
    if (cfg.contains("echo_rate")) {
        rate_echo = cfg["echo_rate"].get<double>();
    } else if (cfg.contains("gamma_m")) {
        // invert the v1 relation: Gamma_phiE = v1 sqrt(ln 2 / (2 ln(gamma_c/gamma_m)))
        const double gamma_m = cfg["gamma_m"].get<double>();
        rate_echo = slow.a_star * std::sqrt(M_LN2 / (2.0 * std::log(gamma_c / gamma_m)));
    }
    report["gamma_phi_f_gaussian"] = rate_fid;
    if (std::isfinite(rate_echo)) {
        report["gamma_phi_e_gaussian"] = rate_echo;
        report["rate_ratio"] = rate_fid / rate_echo;
    }

    OutputTarget out(args, cfg);
    out.stream() << report.dump(2) << '\n';

    if (cfg.contains("curve_output")) {
        std::ofstream curve_file(cfg["curve_output"].get<std::string>());
        if (!curve_file)
            throw IoError("cannot open curve output: " + cfg["curve_output"].get<std::string>());
        std::vector<double> grid;
        for (const auto& s : dataset.samples) grid.push_back(s.t);
        const auto curve =
            two_fluctuator_envelope(slow, {fit.v2, fit.gamma_2}, 1.0, dataset.protocol, grid);
        write_csv(curve_file, curve, {"config-hash: " + config_hash_hex(cfg)});
    }
    return 0;
}

// ---------------------------------------------------------------- br-rates

int cmd_br_rates(const CommonArgs& args) {
    using namespace fluctuon;
    const json cfg = load_config_file(args.config_path);
    const json jc = require_block(cfg, "coupling", "qubit coupling {omega, d_z, d_perp}");
    QubitCoupling coupling{jc.value("omega", 0.0), jc.value("d_z", 0.0), jc.value("d_perp", 0.0)};

    std::optional<NoiseBand> fast;
    if (cfg.contains("fast_band")) {
        fast = band_from_json(cfg["fast_band"]);
    } else {
        const ResolvedNoise noise = resolve_noise(cfg);
        if (noise.model)
            for (const auto& band : noise.model->bands)
                if (band.n == 2) fast = band;
    }
    if (!fast) throw ConfigError("br-rates needs a 'fast_band' block or a preset with cutoffs");

    const auto rates = br_rates(coupling, *fast);
    const auto [g1_quad, gphi_quad] = br_partial_rates_quadrature(coupling, *fast);

    ojson report;
    report["command"] = "br-rates";
    report["config_hash"] = config_hash_hex(cfg);
    report["gamma_1"] = rates.gamma_1;
    report["gamma_phi"] = rates.gamma_phi;
    report["gamma_2"] = rates.gamma_2;
    report["tau_2"] = rates.tau_2;
    report["br_valid"] = rates.valid;
    report["gamma_1_quadrature"] = g1_quad;
    report["gamma_phi_quadrature"] = gphi_quad;

    OutputTarget out(args, cfg);
    out.stream() << report.dump(2) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluctuon — telegraph-noise dephasing model runner"};
    app.require_subcommand(1);

    CommonArgs args;
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
        cmd->add_option("--out", args.out_path, "output path (overrides config 'output')");
        cmd->add_option("--seed", seed_value, "seed override")->each([&](const std::string&) {
            seed_given = true;
        });
        cmd->add_option("--threads", args.threads, "worker threads (env FLUCTUON_THREADS)");
    };

    auto* spectrum = app.add_subcommand("spectrum", "spectral-density columns over a log-f grid");
    auto* correlate = app.add_subcommand("correlate", "correlation-function columns");
    auto* decay = app.add_subcommand("decay", "decay envelopes by any method");
    auto* validate = app.add_subcommand("validate", "Monte-Carlo vs closed-form report");
    auto* fit = app.add_subcommand("fit", "fit fast-fluctuator parameters to a dataset");
    auto* br = app.add_subcommand("br-rates", "Bloch-Redfield rates from the fast band");
    for (auto* cmd : {spectrum, correlate, decay, validate, fit, br}) add_common(cmd);

    CLI11_PARSE(app, argc, argv);
    if (seed_given) args.seed_override = seed_value;

    try {
        if (spectrum->parsed()) return cmd_spectrum(args);
        if (correlate->parsed()) return cmd_correlate(args);
        if (decay->parsed()) return cmd_decay(args);
        if (validate->parsed()) return cmd_validate(args);
        if (fit->parsed()) return cmd_fit(args);
        if (br->parsed()) return cmd_br_rates(args);
    } catch (const fluctuon::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(fluctuon::ExitCode::config);
    } catch (const fluctuon::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return static_cast<int>(fluctuon::ExitCode::io);
    } catch (const fluctuon::AccuracyError& e) {
        std::cerr << "accuracy error: " << e.what() << '\n';
        return static_cast<int>(fluctuon::ExitCode::accuracy);
    } catch (const fluctuon::NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return static_cast<int>(fluctuon::ExitCode::non_convergence);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return static_cast<int>(fluctuon::ExitCode::config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(fluctuon::ExitCode::unexpected);
    }
    return 0;
}
