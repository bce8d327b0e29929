#include "homsim/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "homsim/analysis.hpp"
#include "homsim/common.hpp"
#include "homsim/histogram.hpp"
#include "homsim/hom.hpp"
#include "homsim/model.hpp"
#include "homsim/rng.hpp"

namespace homsim::cli {

namespace {

using nlohmann::ordered_json;

int env_workers() {
    const char* v = std::getenv("DEPHASE_HOM_THREADS");
    if (!v) return 1;
    const int n = std::atoi(v);
    return n > 0 ? n : 1;
}

// Flag values shared across subcommands; only the flags a subcommand
// registers are ever read back.
struct Flags {
    double gamma_rad = 0.0;
    double gamma_sd_max = 0.0;
    double tau_c = 1.0;
    std::optional<double> gamma_ph;
    std::optional<double> gamma0;
    std::optional<double> alpha;
    double delta_t = 0.0;
    double rep_period = 12.5;
    std::optional<double> temp;
    double refl = 0.5;
    std::uint64_t seed = 0;
    long samples = 0;
    long counts = 0;
    double bin_width = 0.128;
    std::string in_path;
    std::string out_path;
    std::string kind;
    // simulate extras
    std::string shape = "exponential";
    std::optional<double> peak_width;
    double irf_fwhm = 0.35;
    int n_periods = 3;
    std::optional<double> range_min, range_max;
    bool noiseless = false;
    // analyze-only
    std::optional<double> fixed_peak_width;
    std::optional<double> delta_t_override, rep_period_override;
};

PhononModel phonon_from_flags(const Flags& f) {
    const bool law = f.gamma0.has_value() || f.alpha.has_value();
    if (law) {
        if (!f.gamma0 || !f.alpha)
            throw ConfigError("temperature law needs both --gamma0 and --alpha");
        if (f.gamma_ph)
            throw ConfigError("--gamma-ph conflicts with the --gamma0/--alpha temperature law");
        if (!f.temp) throw ConfigError("temperature law needs --temp");
        return PhononModel::temperature_law(*f.gamma0, *f.alpha);
    }
    return PhononModel::fixed_rate(f.gamma_ph.value_or(0.0));
}

EmitterParams emitter_from_flags(const Flags& f) {
    EmitterParams p;
    p.gamma_rad = f.gamma_rad;
    p.gamma_sd_max = f.gamma_sd_max;
    p.tau_c = f.tau_c;
    p.phonon = phonon_from_flags(f);
    p.validate();
    return p;
}

void echo_config(ordered_json& j, const Flags& f, bool stochastic) {
    j["gamma_rad"] = f.gamma_rad;
    j["gamma_sd_max"] = f.gamma_sd_max;
    j["tau_c"] = f.tau_c;
    if (f.gamma_ph) j["gamma_ph"] = *f.gamma_ph;
    if (f.gamma0) j["gamma0"] = *f.gamma0;
    if (f.alpha) j["alpha"] = *f.alpha;
    if (f.temp) j["temp"] = *f.temp;
    j["delta_t"] = f.delta_t;
    j["rep_period"] = f.rep_period;
    j["refl"] = f.refl;
    if (stochastic) j["seed"] = f.seed;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw DataError("write failed for " + path);
}

std::string summary_path(const std::string& out_path) {
    std::filesystem::path p(out_path);
    p.replace_extension();
    return p.string() + ".summary.json";
}

std::string pattern_path(const std::string& out_path) {
    std::filesystem::path p(out_path);
    p.replace_extension();
    return p.string() + ".pattern.csv";
}

// ---------------------------------------------------------------- predict --

int cmd_predict(const Flags& f, std::ostream& out) {
    if (f.kind != "dt" && f.kind != "temperature")
        throw ConfigError("predict: --kind must be 'dt' or 'temperature'");
    if (f.out_path.empty()) throw ConfigError("predict: --out is required");

    std::ostringstream csv;
    csv << "# homsim " << kVersion << "\n# command=predict\n# kind=" << f.kind << "\n";

    const int workers = env_workers();
    if (f.kind == "dt") {
        if (!(f.gamma_rad > 0.0)) throw ConfigError("predict: kind=dt needs --gamma-rad > 0");
        const EmitterParams params = emitter_from_flags(f);
        const double gamma_ph_val = phonon_dephasing_rate(f.temp.value_or(4.0), params.phonon);
        csv << "# gamma_rad=" << format_double(f.gamma_rad)
            << "\n# gamma_sd_max=" << format_double(f.gamma_sd_max)
            << "\n# tau_c=" << format_double(f.tau_c) << "\n# gamma_ph=" << format_double(gamma_ph_val)
            << "\n# rep_period=" << format_double(f.rep_period) << "\n";
        const bool with_mc = f.samples > 0;
        if (with_mc) {
            if (f.seed == 0) throw ConfigError("predict: --samples needs --seed");
            csv << "# samples=" << f.samples << "\n# seed=" << f.seed << "\n";
        }
        csv << (with_mc ? "x,v,v_mc,v_mc_err\n" : "x,v\n");
        // Grid in exact tenths of a ns; the Monte-Carlo column stops at one
        // repetition period (the estimator's domain).
        const int i_max = static_cast<int>(std::lround(
            (with_mc ? f.rep_period : 1.12 * f.rep_period) * 10.0));
        for (int i = 1; i <= i_max; ++i) {
            const double dt = i / 10.0;
            const double v =
                f.gamma_rad /
                (diffusion_dephasing_rate(dt, f.gamma_sd_max, f.tau_c) + gamma_ph_val + f.gamma_rad);
            csv << format_double(dt) << ',' << format_double(v);
            if (with_mc) {
                const McEstimate mc =
                    mc_visibility(params, PulseSequence{dt, f.rep_period}, f.temp.value_or(4.0),
                                  BeamsplitterParams::balanced(), rng::derive_seed(f.seed, static_cast<std::uint64_t>(i)),
                                  f.samples, workers);
                csv << ',' << format_double(mc.mean) << ',' << format_double(mc.std_err);
            }
            csv << '\n';
        }
    } else {
        if (!f.gamma0 || !f.alpha) throw ConfigError("predict: kind=temperature needs --gamma0 and --alpha");
        csv << "# gamma0=" << format_double(*f.gamma0) << "\n# alpha=" << format_double(*f.alpha) << "\n";
        csv << "x,v\n";
        for (int i = 10; i <= 90; ++i) {
            const double t = i / 2.0;
            csv << format_double(t) << ',' << format_double(visibility_temperature_curve(t, *f.gamma0, *f.alpha))
                << '\n';
        }
    }
    write_text_file(f.out_path, csv.str());
    out << "wrote " << f.out_path << "\n";
    return kExitOk;
}

// --------------------------------------------------------------- simulate --

PeakShape shape_from_flags(const Flags& f) {
    PeakShape s;
    if (f.shape == "exponential") {
        s.kind = PeakShape::Kind::TwoSidedExponential;
        s.width = f.peak_width.value_or(1.0 / f.gamma_rad);
    } else if (f.shape == "lorentzian") {
        s.kind = PeakShape::Kind::Lorentzian;
        s.width = f.peak_width.value_or(2.0 * std::numbers::ln2 / f.gamma_rad);
    } else {
        throw ConfigError("simulate: --shape must be 'exponential' or 'lorentzian'");
    }
    s.irf_fwhm = f.irf_fwhm;
    s.validate();
    return s;
}

int cmd_simulate(const Flags& f, std::ostream& out) {
    if (f.out_path.empty()) throw ConfigError("simulate: --out is required");
    if (!f.noiseless && f.seed == 0) throw ConfigError("simulate: --seed is required");
    if (f.counts < 1) throw ConfigError("simulate: --counts must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    const EmitterParams params = emitter_from_flags(f);
    const PulseSequence seq{f.delta_t, f.rep_period};
    const double temp = f.temp.value_or(4.0);
    const BeamsplitterParams bs{f.refl, 1.0 - f.refl};
    const double v = tpi_visibility(seq, temp, params);
    const PeakShape shape = shape_from_flags(f);

    const ClusterPattern pattern = enumerate_coincidence_pattern(f.delta_t, f.rep_period, f.n_periods, v, bs);
    const double r_lo = f.range_min.value_or(-3.0 * f.rep_period);
    const double r_hi = f.range_max.value_or(3.0 * f.rep_period);

    CoincidenceHistogram h =
        f.noiseless
            ? synthesize_expected(pattern, shape, static_cast<double>(f.counts), f.bin_width, {r_lo, r_hi})
            : synthesize_histogram(pattern, shape, f.counts, f.bin_width, {r_lo, r_hi}, f.seed);

    h.meta.emplace_back("version", kVersion);
    h.meta.emplace_back("command", "simulate");
    h.meta.emplace_back("delta_t_ns", format_double(f.delta_t));
    h.meta.emplace_back("rep_period_ns", format_double(f.rep_period));
    h.meta.emplace_back("n_periods", std::to_string(f.n_periods));
    h.meta.emplace_back("gamma_rad", format_double(f.gamma_rad));
    h.meta.emplace_back("gamma_sd_max", format_double(f.gamma_sd_max));
    h.meta.emplace_back("tau_c", format_double(f.tau_c));
    h.meta.emplace_back("temp_k", format_double(temp));
    h.meta.emplace_back("refl", format_double(f.refl));
    h.meta.emplace_back("visibility", format_double(v));
    h.meta.emplace_back("shape", f.shape);
    h.meta.emplace_back("peak_width_ns", format_double(shape.width));
    h.meta.emplace_back("irf_fwhm_ns", format_double(shape.irf_fwhm));
    h.meta.emplace_back("counts", std::to_string(f.counts));
    h.meta.emplace_back("noiseless", f.noiseless ? "1" : "0");
    if (!f.noiseless) h.meta.emplace_back("seed", std::to_string(f.seed));
    write_histogram(f.out_path, h);

    // Pattern companion: enumerated peaks plus the overlap assignments.
    std::ostringstream pat;
    pat << "# homsim " << kVersion << "\n# command=simulate\n# delta_t_ns=" << format_double(f.delta_t)
        << "\n# rep_period_ns=" << format_double(f.rep_period) << "\n# visibility=" << format_double(v)
        << "\n";
    for (const auto& ov : cluster_overlap_map(f.delta_t, f.rep_period))
        pat << "# overlap: " << ov.central.label << " ~ " << ov.satellite.label
            << " gap_ns=" << format_double(ov.gap) << "\n";
    pat << "delay_ns,weight\n";
    for (const auto& e : pattern.entries)
        pat << format_double(e.delay) << ',' << format_double(e.weight) << '\n';
    write_text_file(pattern_path(f.out_path), pat.str());

    ordered_json summary;
    summary["version"] = kVersion;
    summary["command"] = "simulate";
    echo_config(summary["config"], f, !f.noiseless);
    summary["config"]["counts"] = f.counts;
    summary["config"]["bin_width"] = f.bin_width;
    summary["config"]["shape"] = f.shape;
    summary["config"]["noiseless"] = f.noiseless;
    summary["results"]["visibility"] = v;
    summary["results"]["pattern_entries"] = pattern.entries.size();
    summary["results"]["histogram"] = f.out_path;
    summary["timing_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    write_text_file(summary_path(f.out_path), summary.dump(2) + "\n");

    out << "V = " << format_double(v) << ", wrote " << f.out_path << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- analyze --

// Explicit flags override file metadata; metadata overrides defaults.
double meta_lookup(const CoincidenceHistogram& h, const std::string& key, std::optional<double> flag,
                   std::optional<double> fallback) {
    if (flag) return *flag;
    for (const auto& [k, val] : h.meta)
        if (k == key) return parse_double(val);
    if (fallback) return *fallback;
    throw DataError("analyze: histogram metadata lacks " + key + " (pass the matching flag)");
}

int cmd_analyze(const Flags& f, std::ostream& out) {
    if (f.in_path.empty()) throw ConfigError("analyze: --in is required");
    const auto t0 = std::chrono::steady_clock::now();
    const CoincidenceHistogram h = read_histogram(f.in_path);

    const double delta_t = meta_lookup(h, "delta_t_ns", f.delta_t_override, std::nullopt);
    const double rep_period = meta_lookup(h, "rep_period_ns", f.rep_period_override, 12.5);
    const int n_periods = static_cast<int>(meta_lookup(h, "n_periods", std::nullopt, 3.0));
    const double refl = meta_lookup(h, "refl", std::nullopt, 0.5);

    const BeamsplitterParams bs{refl, 1.0 - refl};
    const ClusterPattern pattern = enumerate_coincidence_pattern(delta_t, rep_period, n_periods, 0.0, bs);
    const VisibilityRegime regime = select_regime(delta_t, rep_period);
    const WidthPolicy policy = f.fixed_peak_width ? WidthPolicy::fixed(*f.fixed_peak_width)
                                                  : WidthPolicy::fit_at_reference();
    const PeakAreas areas = fit_peak_areas(h, pattern, policy);
    const VisibilityPoint vp = visibility_estimate(areas, regime, delta_t);

    out << "V = " << format_double(vp.v) << " +- " << format_double(vp.sigma) << "\n";

    if (!f.out_path.empty()) {
        ordered_json summary;
        summary["version"] = kVersion;
        summary["command"] = "analyze";
        summary["config"]["in"] = f.in_path;
        summary["config"]["delta_t"] = delta_t;
        summary["config"]["rep_period"] = rep_period;
        summary["config"]["width_policy"] = f.fixed_peak_width ? "fixed" : "fit_at_reference";
        summary["results"]["v"] = vp.v;
        summary["results"]["sigma"] = vp.sigma;
        summary["results"]["regime"] = regime == VisibilityRegime::NoOverlap        ? "no_overlap"
                                       : regime == VisibilityRegime::MergedNeighbors ? "merged_neighbors"
                                                                                     : "full_period";
        summary["results"]["fitted_width_ns"] = areas.fitted_width;
        summary["results"]["central_areas"] = areas.central;
        summary["results"]["central_sigmas"] = areas.central_sigma;
        summary["results"]["chi2"] = areas.chi2;
        summary["results"]["dof"] = areas.dof;
        summary["timing_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        write_text_file(f.out_path, summary.dump(2) + "\n");
    }
    return kExitOk;
}

// -------------------------------------------------------------------- fit --

int cmd_fit(const Flags& f, std::ostream& out, std::ostream& err) {
    if (f.in_path.empty()) throw ConfigError("fit: --in is required");
    if (f.out_path.empty()) throw ConfigError("fit: --out is required");

    FitResult result;
    if (f.kind == "dt") {
        if (!(f.gamma_rad > 0.0)) throw ConfigError("fit: kind=dt needs --gamma-rad");
        const auto points = read_visibility_csv(f.in_path);
        for (const auto& flag : validate_visibility_points(points)) err << "warning: " << flag << "\n";
        result = fit_visibility_vs_dt(points, f.gamma_rad,
                                      f.gamma_ph ? std::optional(*f.gamma_ph) : std::nullopt);
    } else if (f.kind == "temperature") {
        const auto points = read_visibility_csv(f.in_path);
        for (const auto& flag : validate_visibility_points(points)) err << "warning: " << flag << "\n";
        result = fit_visibility_vs_temperature(points);
    } else if (f.kind == "michelson") {
        result = fit_exponential_contrast(read_contrast_csv(f.in_path));
    } else {
        throw ConfigError("fit: --kind must be 'dt', 'temperature' or 'michelson'");
    }

    write_text_file(f.out_path, fit_result_to_json(result));
    for (std::size_t i = 0; i < result.names.size(); ++i) {
        out << result.names[i] << " = " << format_double(result.params[static_cast<Eigen::Index>(i)])
            << " +- " << format_double(result.sigmas[static_cast<Eigen::Index>(i)]);
        if (result.at_bound[i]) out << " (at bound)";
        out << "\n";
    }
    out << "chi2 = " << format_double(result.chi2) << ", iterations = " << result.n_iter << "\n";
    if (result.degenerate) err << "warning: degenerate chi^2 valley; sigmas are lower bounds\n";
    if (!result.converged) {
        err << "fit did not converge within the iteration cap\n";
        return kExitNonConvergence;
    }
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pulsed-emitter two-photon-interference toolkit"};
    app.set_version_flag("--version", std::string("homsim ") + kVersion);
    Flags f;

    const auto add_emitter = [&](CLI::App* cmd, bool require_core) {
        auto* gr = cmd->add_option("--gamma-rad", f.gamma_rad, "radiative decay rate (1/ns)");
        cmd->add_option("--gamma-sd-max", f.gamma_sd_max, "max spectral-diffusion dephasing (1/ns)");
        cmd->add_option("--tau-c", f.tau_c, "noise correlation time (ns)");
        cmd->add_option("--gamma-ph", [&f](const CLI::results_t& r) { f.gamma_ph = std::stod(r[0]); return true; },
                        "fixed phonon dephasing rate (1/ns)");
        cmd->add_option("--gamma0", [&f](const CLI::results_t& r) { f.gamma0 = std::stod(r[0]); return true; },
                        "phonon temperature-law prefactor");
        cmd->add_option("--alpha", [&f](const CLI::results_t& r) { f.alpha = std::stod(r[0]); return true; },
                        "effective phonon temperature (K)");
        cmd->add_option("--temp", [&f](const CLI::results_t& r) { f.temp = std::stod(r[0]); return true; },
                        "sample temperature (K)");
        if (require_core) gr->required();
    };

    auto* predict = app.add_subcommand("predict", "emit closed-form visibility curves as CSV");
    add_emitter(predict, false);
    predict->add_option("--rep-period", f.rep_period, "laser repetition period (ns)");
    predict->add_option("--refl", f.refl, "beamsplitter reflectivity");
    predict->add_option("--seed", f.seed, "random seed (with --samples)");
    predict->add_option("--samples", f.samples, "Monte-Carlo cross-check samples per grid point");
    predict->add_option("--kind", f.kind, "dt | temperature")->required();
    predict->add_option("--out", f.out_path, "output CSV path")->required();

    auto* simulate = app.add_subcommand("simulate", "synthesize a coincidence histogram");
    add_emitter(simulate, true);
    simulate->add_option("--delta-t", f.delta_t, "pulse separation (ns)")->required();
    simulate->add_option("--rep-period", f.rep_period, "laser repetition period (ns)");
    simulate->add_option("--refl", f.refl, "beamsplitter reflectivity");
    simulate->add_option("--seed", f.seed, "random seed");
    simulate->add_option("--counts", f.counts, "total coincidence counts")->required();
    simulate->add_option("--bin-width", f.bin_width, "histogram bin width (ns)");
    simulate->add_option("--out", f.out_path, "output histogram path")->required();
    simulate->add_option("--shape", f.shape, "peak shape: exponential | lorentzian");
    simulate->add_option("--peak-width",
                         [&f](const CLI::results_t& r) { f.peak_width = std::stod(r[0]); return true; },
                         "peak width (ns); default from gamma-rad");
    simulate->add_option("--irf-fwhm", f.irf_fwhm, "Gaussian IRF FWHM (ns)");
    simulate->add_option("--n-periods", f.n_periods, "clusters per side");
    simulate->add_option("--range-min",
                         [&f](const CLI::results_t& r) { f.range_min = std::stod(r[0]); return true; },
                         "histogram range start (ns)");
    simulate->add_option("--range-max",
                         [&f](const CLI::results_t& r) { f.range_max = std::stod(r[0]); return true; },
                         "histogram range end (ns)");
    simulate->add_flag("--noiseless", f.noiseless, "write expected contents instead of Poisson draws");

    auto* analyze = app.add_subcommand("analyze", "recover a visibility from a histogram");
    analyze->add_option("--in", f.in_path, "histogram path")->required();
    analyze->add_option("--out", f.out_path, "summary JSON path");
    analyze->add_option("--delta-t",
                        [&f](const CLI::results_t& r) { f.delta_t_override = std::stod(r[0]); return true; },
                        "pulse separation override (ns)");
    analyze->add_option("--rep-period",
                        [&f](const CLI::results_t& r) { f.rep_period_override = std::stod(r[0]); return true; },
                        "repetition period override (ns)");
    analyze->add_option("--peak-width",
                        [&f](const CLI::results_t& r) { f.fixed_peak_width = std::stod(r[0]); return true; },
                        "fixed Lorentzian FWHM (ns); default fits a shared width");

    auto* fit = app.add_subcommand("fit", "fit model parameters to a CSV dataset");
    fit->add_option("--in", f.in_path, "dataset CSV path")->required();
    fit->add_option("--out", f.out_path, "fit-result JSON path")->required();
    fit->add_option("--kind", f.kind, "dt | temperature | michelson")->required();
    fit->add_option("--gamma-rad", f.gamma_rad, "fixed radiative rate (1/ns), kind=dt");
    fit->add_option("--gamma-ph",
                    [&f](const CLI::results_t& r) { f.gamma_ph = std::stod(r[0]); return true; },
                    "hold gamma_ph fixed at this value (kind=dt); omit to fit it");

    app.require_subcommand(1);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            return kExitOk;
        }
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (predict->parsed()) return cmd_predict(f, out);
        if (simulate->parsed()) return cmd_simulate(f, out);
        if (analyze->parsed()) return cmd_analyze(f, out);
        if (fit->parsed()) return cmd_fit(f, out, err);
        err << "error: no subcommand\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ConvergenceError& e) {
        err << "non-convergence: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace homsim::cli
