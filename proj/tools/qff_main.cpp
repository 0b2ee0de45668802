// qff: filter functions, error transfer matrices, and fidelity metrics of
// piecewise-constant control pulses under classical non-Markovian noise.

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qff/control_matrix.hpp"
#include "qff/error_channel.hpp"
#include "qff/io.hpp"
#include "qff/metrics.hpp"
#include "qff/montecarlo.hpp"
#include "qff/parallel.hpp"
#include "qff/spectrum.hpp"

using nlohmann::json;

namespace {

struct GridSpec {
    double omega_min = 0.0;
    double omega_max = 0.0;
    int n = 300;
    std::string scale = "log";
    bool given() const { return omega_max > 0.0; }
};

struct Options {
    std::vector<std::string> pulse_files;
    std::string spectrum_file;
    std::string out = "-";
    std::string out_pulse;
    std::string projector_file;
    std::string mode = "exact";
    std::string format = "json";
    std::string method = "gamma-trace";
    bool with_shifts = false;
    bool hz = false;
    long reps = 1;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    int traj = 2000;
    int sub = 64;
    double timeout = 30.0;
    std::vector<int> dims;
    GridSpec grid;
};

double freq_scale(const Options& opt) {
    return opt.hz ? 2.0 * std::numbers::pi : 1.0;
}

qff::RVector build_grid(const Options& opt, const qff::Spectrum* spectrum) {
    if (opt.grid.given()) {
        const double lo = opt.grid.omega_min * freq_scale(opt);
        const double hi = opt.grid.omega_max * freq_scale(opt);
        if (opt.grid.scale == "log") return qff::log_grid(lo, hi, opt.grid.n);
        if (opt.grid.scale == "linear")
            return qff::linear_grid(lo, hi, opt.grid.n);
        throw qff::ValidationError("--omega-scale must be 'log' or 'linear'");
    }
    if (spectrum) return spectrum->omega();
    throw qff::ValidationError(
        "no frequency grid: pass --omega-min/--omega-max or a spectrum file "
        "that defines one");
}

std::ofstream open_out_file(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw qff::ParseError("cannot write '" + path + "'");
    return f;
}

void emit_json(const Options& opt, const json& j) {
    if (opt.out == "-") {
        std::cout << j.dump(2) << '\n';
    } else {
        auto f = open_out_file(opt.out);
        f << j.dump(2) << '\n';
    }
}

qff::PulseSequence load_single_pulse(const Options& opt) {
    if (opt.pulse_files.size() != 1)
        throw qff::ValidationError("exactly one --pulse file required");
    return qff::io::load_pulse(opt.pulse_files[0]);
}

qff::Spectrum load_spectrum_for(const Options& opt,
                                const qff::PulseSequence& pulse) {
    if (opt.spectrum_file.empty())
        throw qff::ValidationError("--spectrum file required");
    return qff::io::load_spectrum(opt.spectrum_file, pulse.noise_ids(),
                                  freq_scale(opt));
}

json infidelity_json(const std::map<std::pair<std::string, std::string>, double>&
                         per_source) {
    json j = json::object();
    double total = 0.0;
    for (const auto& [key, value] : per_source) {
        j[key.first + "," + key.second] = value;
        total += value;
    }
    return json{{"per_source", j}, {"total", total}};
}

int run_filter_function(const Options& opt) {
    const auto pulse = load_single_pulse(opt);
    std::optional<qff::Spectrum> spectrum;
    if (!opt.spectrum_file.empty()) spectrum = load_spectrum_for(opt, pulse);
    const qff::RVector omega =
        build_grid(opt, spectrum ? &*spectrum : nullptr);
    const qff::RMatrix f = qff::fidelity_filter_function(pulse, omega);
    std::vector<std::string> labels;
    for (const auto& id : pulse.noise_ids()) labels.push_back("F_" + id);
    if (opt.out == "-")
        qff::io::write_curves_csv(std::cout, omega, f, labels, freq_scale(opt));
    else
        qff::io::save_curves_csv(opt.out, omega, f, labels, freq_scale(opt));
    return 0;
}

int run_infidelity(const Options& opt) {
    const auto pulse = load_single_pulse(opt);
    const auto spectrum = load_spectrum_for(opt, pulse);
    const qff::RVector omega = qff::two_sided_grid(build_grid(opt, &spectrum));
    const auto cm = pulse.control_matrix(omega);
    const auto method = opt.method == "ff-integral"
                            ? qff::InfidelityMethod::FFIntegral
                            : qff::InfidelityMethod::GammaTrace;
    json j = infidelity_json(qff::infidelity(*cm, spectrum, pulse.dim(), method));
    j["method"] = opt.method;
    j["dim"] = pulse.dim();
    if (spectrum.diagonal_only()) {
        const double xi_sq = qff::xi_squared(pulse, spectrum);
        j["xi_squared"] = xi_sq;
        j["magnus_convergent"] = qff::magnus_convergent(xi_sq);
    }
    emit_json(opt, j);
    return 0;
}

int run_transfer_matrix(const Options& opt) {
    const auto pulse = load_single_pulse(opt);
    const auto spectrum = load_spectrum_for(opt, pulse);
    const qff::RVector omega = qff::two_sided_grid(build_grid(opt, &spectrum));
    qff::ErrorChannelOptions chopts;
    chopts.with_frequency_shifts = opt.with_shifts;
    chopts.mode = opt.mode == "first-order" ? qff::TransferMode::FirstOrder
                                            : qff::TransferMode::Exact;
    const auto channel =
        qff::compute_error_channel(pulse, spectrum, omega, chopts);
    if (opt.format == "csv") {
        if (opt.out == "-")
            throw qff::ValidationError("csv transfer matrix needs --out");
        qff::io::save_matrix_csv(channel.transfer, opt.out);
    } else if (opt.out == "-") {
        qff::io::write_matrix_json(std::cout, channel.transfer);
    } else {
        qff::io::save_matrix_json(channel.transfer, opt.out);
    }
    return 0;
}

int run_concat(const Options& opt) {
    if (opt.pulse_files.size() < 1)
        throw qff::ValidationError("concat needs at least one --pulse");
    std::vector<qff::PulseSequence> pulses;
    for (const auto& f : opt.pulse_files) pulses.push_back(qff::io::load_pulse(f));
    std::optional<qff::Spectrum> spectrum;
    if (!opt.spectrum_file.empty())
        spectrum = qff::io::load_spectrum(opt.spectrum_file,
                                          pulses[0].noise_ids(), freq_scale(opt));
    const qff::RVector omega = build_grid(opt, spectrum ? &*spectrum : nullptr);
    auto result = qff::concatenate(pulses, omega);
    if (!opt.out_pulse.empty()) qff::io::save_pulse(result.pulse, opt.out_pulse);
    const qff::RMatrix f = qff::fidelity_filter_function(*result.control);
    std::vector<std::string> labels;
    for (const auto& id : result.pulse.noise_ids()) labels.push_back("F_" + id);
    if (opt.out == "-")
        qff::io::write_curves_csv(std::cout, omega, f, labels, freq_scale(opt));
    else
        qff::io::save_curves_csv(opt.out, omega, f, labels, freq_scale(opt));
    return 0;
}

int run_periodic(const Options& opt) {
    const auto pulse = load_single_pulse(opt);
    std::optional<qff::Spectrum> spectrum;
    if (!opt.spectrum_file.empty()) spectrum = load_spectrum_for(opt, pulse);
    const qff::RVector omega = build_grid(opt, spectrum ? &*spectrum : nullptr);
    const auto cm = qff::concatenate_periodic(pulse, omega, opt.reps);
    const qff::RMatrix f = qff::fidelity_filter_function(cm);
    std::vector<std::string> labels;
    for (const auto& id : pulse.noise_ids()) labels.push_back("F_" + id);
    if (opt.out == "-")
        qff::io::write_curves_csv(std::cout, omega, f, labels, freq_scale(opt));
    else
        qff::io::save_curves_csv(opt.out, omega, f, labels, freq_scale(opt));
    return 0;
}

int run_leakage(const Options& opt) {
    const auto pulse = load_single_pulse(opt);
    const auto spectrum = load_spectrum_for(opt, pulse);
    if (opt.projector_file.empty())
        throw qff::ValidationError("--projector file required");
    const qff::CMatrix projector = qff::io::load_matrix(opt.projector_file);
    const qff::RVector omega = qff::two_sided_grid(build_grid(opt, &spectrum));
    qff::ErrorChannelOptions chopts;
    chopts.mode = opt.mode == "first-order" ? qff::TransferMode::FirstOrder
                                            : qff::TransferMode::Exact;
    const auto channel =
        qff::compute_error_channel(pulse, spectrum, omega, chopts);
    const auto err_rates =
        qff::leakage_rates(channel.transfer, projector, pulse.basis());
    const qff::CMatrix total =
        pulse.total_liouville().cast<qff::Complex>() * channel.transfer;
    const auto tot_rates = qff::leakage_rates(total, projector, pulse.basis());
    emit_json(opt, json{{"error_channel",
                         {{"leakage", err_rates.leakage},
                          {"seepage", err_rates.seepage}}},
                        {"total",
                         {{"leakage", tot_rates.leakage},
                          {"seepage", tot_rates.seepage}}}});
    return 0;
}

int run_mc_validate(const Options& opt) {
    const auto pulse = load_single_pulse(opt);
    if (opt.spectrum_file.empty())
        throw qff::ValidationError("--spectrum file required");
    std::ifstream probe(opt.spectrum_file);
    if (!probe) throw qff::ParseError("cannot open '" + opt.spectrum_file + "'");
    json sj;
    try {
        sj = json::parse(probe);
    } catch (const json::parse_error& e) {
        throw qff::ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!sj.contains("model"))
        throw qff::ValidationError(
            "mc-validate requires a model spectrum (white or power_law)");

    const auto spectrum = load_spectrum_for(opt, pulse);
    const qff::RVector omega = qff::two_sided_grid(build_grid(opt, &spectrum));

    double infid_ff = 0.0;
    for (const auto& [key, value] : qff::infidelity(
             *pulse.control_matrix(omega), spectrum, pulse.dim(),
             qff::InfidelityMethod::GammaTrace))
        infid_ff += value;

    qff::McConfig cfg;
    cfg.n_traj = opt.traj;
    cfg.n_sub = opt.sub;
    cfg.seed = opt.seed;
    const std::string model = sj.at("model").get<std::string>();
    const json params = sj.value("params", json::object());
    if (model == "white") {
        cfg.model = qff::WhiteNoiseModel{params.at("level").get<double>()};
    } else {
        qff::PowerLawNoiseModel pl;
        pl.amplitude = params.at("amplitude").get<double>();
        pl.exponent = params.at("exponent").get<double>();
        pl.ir_cutoff = omega(omega.size() - 1) > 0 ? std::abs(omega(0)) : 0.0;
        for (int i = 0; i < omega.size(); ++i)
            if (omega(i) > 0) {
                pl.ir_cutoff = omega(i);
                break;
            }
        pl.uv_cutoff = omega(omega.size() - 1);
        cfg.model = pl;
    }
    const auto est = qff::mc_entanglement_fidelity(pulse, cfg);
    const double infid_mc = 1.0 - est.mean;
    const double sigma = est.std_error > 0
                             ? std::abs(infid_ff - infid_mc) / est.std_error
                             : std::numeric_limits<double>::infinity();
    emit_json(opt, json{{"infidelity_ff", infid_ff},
                        {"infidelity_mc", infid_mc},
                        {"mc_stderr", est.std_error},
                        {"discrepancy_sigma", sigma},
                        {"n_traj", est.n_traj},
                        {"seed", opt.seed}});
    return 0;
}

int run_bench(const Options& opt) {
    if (opt.dims.empty())
        throw qff::ValidationError("--dims required (e.g. --dims 2,3,4,6)");
    qff::McConfig cfg;
    cfg.n_traj = opt.traj;
    cfg.n_sub = opt.sub;
    cfg.seed = opt.seed;
    cfg.model = qff::WhiteNoiseModel{1e-4};
    qff::BenchParams params;
    params.timeout_seconds = opt.timeout;
    const auto result = qff::scaling_benchmark(opt.dims, cfg, params);

    std::ostringstream os;
    os << "d,method,wall_seconds,estimate,stderr\n";
    for (const auto& row : result.rows) {
        if (row.skipped) continue;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d,%s,%.6g,%.6g,%.6g\n", row.dim,
                      row.method.c_str(), row.wall_seconds, row.estimate,
                      row.std_error);
        os << buf;
    }
    for (const auto& fit : result.fits) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "# fit %s: t = exp(%.4g) * d^%.3g (rms residual %.3g)\n",
                      fit.method.c_str(), fit.log_prefactor, fit.exponent,
                      fit.residual);
        os << buf;
    }
    if (opt.out == "-") {
        std::cout << os.str();
    } else {
        auto f = open_out_file(opt.out);
        f << os.str();
    }
    return 0;
}

void emit_error(const char* kind, const std::string& message) {
    std::cerr << json{{"error", {{"kind", kind}, {"message", message}}}}.dump()
              << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Noise-averaged quantum processes and filter functions of\n"
        "piecewise-constant control pulses under classical noise.\n"
        "All frequencies are angular (rad/time) unless --hz is given, in\n"
        "which case file and flag frequencies are ordinary (cycles/time)\n"
        "and converted by 2*pi on ingest and egress. Noise power follows\n"
        "<b^2> = int dw/2pi S(w)."};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--threads", opt.threads, "Cap worker threads (0 = all cores)");
    app.add_flag("--hz", opt.hz,
                 "Treat file/flag frequencies as ordinary frequencies");

    auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--omega-min", opt.grid.omega_min, "Grid minimum");
        cmd->add_option("--omega-max", opt.grid.omega_max, "Grid maximum");
        cmd->add_option("--omega-n", opt.grid.n, "Grid point count");
        cmd->add_option("--omega-scale", opt.grid.scale, "log or linear");
    };
    auto add_pulse = [&](CLI::App* cmd) {
        cmd->add_option("--pulse", opt.pulse_files, "Pulse definition JSON file")
            ->required();
    };
    auto add_spectrum = [&](CLI::App* cmd, bool required) {
        auto* o = cmd->add_option("--spectrum", opt.spectrum_file,
                                  "Spectrum JSON file (tabulated or model)");
        if (required) o->required();
    };
    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", opt.out, "Output path ('-' = stdout)");
    };

    auto* ff = app.add_subcommand(
        "filter-function",
        "Fidelity filter function. CSV columns: 'omega' (angular frequency, "
        "or ordinary frequency with --hz), then 'F_<id>' (dimensionless "
        "filter function) per noise source id.");
    add_pulse(ff);
    add_spectrum(ff, false);
    add_grid(ff);
    add_out(ff);

    auto* infid = app.add_subcommand(
        "infidelity",
        "First-order infidelities per source pair as JSON, plus the "
        "convergence parameter xi^2 for diagonal spectra.");
    add_pulse(infid);
    add_spectrum(infid, true);
    add_grid(infid);
    add_out(infid);
    infid->add_option("--infidelity-method", opt.method,
                      "gamma-trace or ff-integral");

    auto* tm = app.add_subcommand(
        "transfer-matrix",
        "Error transfer matrix <U~> as JSON {rows, cols, real, imag} or CSV "
        "(real block then imaginary block, row-major).");
    add_pulse(tm);
    add_spectrum(tm, true);
    add_grid(tm);
    add_out(tm);
    tm->add_option("--mode", opt.mode, "exact or first-order");
    tm->add_flag("--with-shifts", opt.with_shifts,
                 "Include second-order frequency shifts (off by default)");
    tm->add_option("--format", opt.format, "json or csv");

    auto* concat = app.add_subcommand(
        "concat",
        "Concatenate pulses in the order given. Emits the composite filter "
        "function CSV (columns as in filter-function) and optionally the "
        "merged pulse file.");
    concat->add_option("--pulse", opt.pulse_files,
                       "Pulse files, in sequence order")
        ->required();
    add_spectrum(concat, false);
    add_grid(concat);
    add_out(concat);
    concat->add_option("--out-pulse", opt.out_pulse,
                       "Write the merged pulse JSON here");

    auto* periodic = app.add_subcommand(
        "periodic",
        "Filter function of G repetitions of a pulse via the closed-form "
        "Neumann series. CSV columns as in filter-function.");
    add_pulse(periodic);
    add_spectrum(periodic, false);
    add_grid(periodic);
    add_out(periodic);
    periodic->add_option("--reps", opt.reps, "Repetition count G")->required();

    auto* leak = app.add_subcommand(
        "leakage",
        "Leakage and seepage rates of the error channel and of the total "
        "channel, JSON output.");
    add_pulse(leak);
    add_spectrum(leak, true);
    add_grid(leak);
    add_out(leak);
    leak->add_option("--projector", opt.projector_file,
                     "Computational-subspace projector JSON matrix")
        ->required();
    leak->add_option("--mode", opt.mode, "exact or first-order");

    auto* mcv = app.add_subcommand(
        "mc-validate",
        "Run the filter-function and Monte Carlo infidelity side by side "
        "and report the discrepancy in units of the MC standard error.");
    add_pulse(mcv);
    add_spectrum(mcv, true);
    add_grid(mcv);
    add_out(mcv);
    mcv->add_option("--traj", opt.traj, "Trajectory count");
    mcv->add_option("--sub", opt.sub, "Sub-steps per segment");
    mcv->add_option("--seed", opt.seed, "RNG seed");

    auto* bench = app.add_subcommand(
        "bench",
        "Scaling benchmark. CSV columns: 'd' (Hilbert dimension), 'method' "
        "(mc | ff_liouville | ff_conjugation), 'wall_seconds', 'estimate' "
        "(infidelity), 'stderr' (0 for deterministic methods); fitted "
        "log-log exponents appended as '#' comment lines.");
    bench->add_option("--dims", opt.dims, "Hilbert-space dimensions")
        ->required()
        ->delimiter(',');
    add_out(bench);
    bench->add_option("--traj", opt.traj, "MC trajectory count");
    bench->add_option("--sub", opt.sub, "MC sub-steps per segment");
    bench->add_option("--seed", opt.seed, "RNG seed");
    bench->add_option("--timeout", opt.timeout, "Per-cell timeout in seconds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        emit_error("parse", e.what());
        return 1;
    }

    if (opt.threads) qff::set_thread_count(opt.threads);

    try {
        if (app.got_subcommand(ff)) return run_filter_function(opt);
        if (app.got_subcommand(infid)) return run_infidelity(opt);
        if (app.got_subcommand(tm)) return run_transfer_matrix(opt);
        if (app.got_subcommand(concat)) return run_concat(opt);
        if (app.got_subcommand(periodic)) return run_periodic(opt);
        if (app.got_subcommand(leak)) return run_leakage(opt);
        if (app.got_subcommand(mcv)) return run_mc_validate(opt);
        if (app.got_subcommand(bench)) return run_bench(opt);
        emit_error("parse", "no subcommand");
        return 1;
    } catch (const qff::ParseError& e) {
        emit_error("parse", e.what());
        return 1;
    } catch (const qff::ValidationError& e) {
        emit_error("validation", e.what());
        return 2;
    } catch (const qff::NumericalError& e) {
        emit_error("numerical", e.what());
        return 3;
    } catch (const std::exception& e) {
        emit_error("numerical", e.what());
        return 3;
    }
}
