#include "qff/montecarlo.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include "qff/control_matrix.hpp"
#include "qff/error_channel.hpp"
#include "qff/metrics.hpp"
#include "qff/parallel.hpp"
#include "qff/spectrum.hpp"

namespace qff {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 stream_engine(std::uint64_t seed, int traj, int source) {
    const std::uint64_t s = splitmix64(seed) ^
                            splitmix64(0x100000001ULL * (traj + 1)) ^
                            splitmix64(0x200000003ULL * (source + 1));
    return std::mt19937_64(splitmix64(s));
}

double model_psd(const NoiseModel& model, double w) {
    if (const auto* white = std::get_if<WhiteNoiseModel>(&model))
        return white->level;
    const auto& pl = std::get<PowerLawNoiseModel>(model);
    const double aw = std::abs(w);
    if (aw < pl.ir_cutoff || aw > pl.uv_cutoff || aw == 0.0) return 0.0;
    return pl.amplitude * std::pow(aw, -pl.exponent);
}

}  // namespace

TrajectorySet sample_trajectories(const McConfig& cfg, int n_sources,
                                  int total_steps, double dt_sub) {
    if (cfg.n_traj < 1 || cfg.n_sub < 1)
        throw ValidationError("mc: n_traj and n_sub must be >= 1");
    if (total_steps < 1 || !(dt_sub > 0))
        throw ValidationError("mc: invalid step layout");

    TrajectorySet set(cfg.n_traj, n_sources, total_steps);
    const bool white = std::holds_alternative<WhiteNoiseModel>(cfg.model);

    // frequency bins of the uniform grid (only needed for shaping)
    std::vector<double> bin_scale;
    if (!white) {
        bin_scale.resize(total_steps);
        const double dw = 2.0 * std::numbers::pi / (total_steps * dt_sub);
        for (int k = 0; k < total_steps; ++k) {
            const double w =
                (k <= total_steps / 2) ? k * dw : (k - total_steps) * dw;
            bin_scale[k] = std::sqrt(model_psd(cfg.model, w) / dt_sub);
        }
    }
    const double white_sigma =
        white ? std::sqrt(std::get<WhiteNoiseModel>(cfg.model).level / dt_sub)
              : 0.0;

    parallel_for(static_cast<std::size_t>(cfg.n_traj), [&](std::size_t t) {
        for (int a = 0; a < n_sources; ++a) {
            auto engine = stream_engine(cfg.seed, static_cast<int>(t), a);
            std::normal_distribution<double> gauss(0.0, 1.0);
            if (white) {
                if (white_sigma == 0.0) continue;
                for (int s = 0; s < total_steps; ++s)
                    set.at(static_cast<int>(t), a, s) = white_sigma * gauss(engine);
            } else {
                std::vector<double> noise(total_steps);
                for (auto& x : noise) x = gauss(engine);
                Eigen::FFT<double> fft;
                std::vector<std::complex<double>> spec;
                fft.fwd(spec, noise);
                for (int k = 0; k < total_steps; ++k) spec[k] *= bin_scale[k];
                std::vector<std::complex<double>> shaped;
                fft.inv(shaped, spec);
                for (int s = 0; s < total_steps; ++s)
                    set.at(static_cast<int>(t), a, s) = shaped[s].real();
            }
        }
    });
    return set;
}

McEstimate mc_entanglement_fidelity(const PulseSequence& p, const McConfig& cfg) {
    const int d = p.dim();
    const int n_src = p.n_noise();

    // uniform sub-step grid aligned with segment boundaries
    const double dt_min = p.dt().minCoeff();
    const double dt_sub = dt_min / cfg.n_sub;
    std::vector<int> sub_steps(p.n_segments());
    int total_steps = 0;
    for (int g = 0; g < p.n_segments(); ++g) {
        sub_steps[g] = std::max(1L, std::lround(p.dt()(g) / dt_sub));
        total_steps += sub_steps[g];
    }

    const TrajectorySet noise =
        sample_trajectories(cfg, n_src, total_steps, dt_sub);

    // constant per-segment pieces
    std::vector<CMatrix> h_control(p.n_segments());
    for (int g = 0; g < p.n_segments(); ++g)
        h_control[g] = p.segment_hamiltonian(g);
    const CMatrix q_target = p.total_propagator();

    std::vector<double> fidelities(cfg.n_traj, 0.0);
    parallel_for(static_cast<std::size_t>(cfg.n_traj), [&](std::size_t t) {
        CMatrix u = CMatrix::Identity(d, d);
        Eigen::SelfAdjointEigenSolver<CMatrix> solver;
        CMatrix h(d, d);
        int step = 0;
        for (int g = 0; g < p.n_segments(); ++g) {
            const double dt_g = p.dt()(g) / sub_steps[g];
            for (int s = 0; s < sub_steps[g]; ++s, ++step) {
                h = h_control[g];
                for (int a = 0; a < n_src; ++a)
                    h += noise.at(static_cast<int>(t), a, step) *
                         p.noise_sens()(a, g) * p.noise_ops()[a];
                solver.compute(h);
                CVector phases(d);
                for (int i = 0; i < d; ++i)
                    phases(i) =
                        std::exp(Complex(0.0, -solver.eigenvalues()(i) * dt_g));
                u = solver.eigenvectors() * phases.asDiagonal() *
                    solver.eigenvectors().adjoint() * u;
            }
        }
        const Complex overlap = (q_target.adjoint() * u).trace() / double(d);
        fidelities[t] = std::norm(overlap);
    });

    McEstimate est;
    est.n_traj = cfg.n_traj;
    double mean = 0.0;
    for (double f : fidelities) mean += f;
    mean /= cfg.n_traj;
    double var = 0.0;
    for (double f : fidelities) var += (f - mean) * (f - mean);
    var = cfg.n_traj > 1 ? var / (cfg.n_traj - 1) : 0.0;
    est.mean = mean;
    est.std_error = std::sqrt(var / cfg.n_traj);
    return est;
}

namespace {

CMatrix random_hermitian(std::mt19937_64& engine, int d, bool traceless) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = Complex(gauss(engine), gauss(engine));
    CMatrix h = 0.5 * (m + m.adjoint());
    if (traceless) h -= (h.trace() / double(d)) * CMatrix::Identity(d, d);
    return h / h.norm();
}

BenchFit fit_loglog(const std::string& method, const std::vector<BenchRow>& rows) {
    std::vector<double> x, y;
    for (const auto& r : rows)
        if (r.method == method && !r.skipped && r.wall_seconds > 0) {
            x.push_back(std::log(static_cast<double>(r.dim)));
            y.push_back(std::log(r.wall_seconds));
        }
    BenchFit fit;
    fit.method = method;
    const std::size_t n = x.size();
    if (n < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    fit.exponent = (n * sxy - sx * sy) / denom;
    fit.log_prefactor = (sy - fit.exponent * sx) / n;
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (fit.log_prefactor + fit.exponent * x[i]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / n);
    return fit;
}

}  // namespace

BenchResult scaling_benchmark(const std::vector<int>& dims, const McConfig& cfg,
                              const BenchParams& params) {
    using clock = std::chrono::steady_clock;
    BenchResult result;
    bool mc_timed_out = false, ff_timed_out = false, conj_timed_out = false;

    for (int d : dims) {
        std::mt19937_64 engine(splitmix64(cfg.seed ^ (0x517cc1b7ULL * d)));
        auto basis = std::make_shared<const Basis>(Basis::ggm(d));

        std::vector<CMatrix> control_ops{random_hermitian(engine, d, false)};
        RMatrix coeffs(1, params.n_segments);
        std::vector<CMatrix> noise_ops;
        std::vector<std::string> ids;
        for (int a = 0; a < params.n_noise_ops; ++a) {
            noise_ops.push_back(random_hermitian(engine, d, true));
            ids.push_back(std::to_string(a));
        }
        RMatrix sens = RMatrix::Ones(params.n_noise_ops, params.n_segments);
        RVector dt = RVector::Ones(params.n_segments);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int g = 0; g < params.n_segments; ++g) coeffs(0, g) = gauss(engine);
        PulseSequence pulse(control_ops, coeffs, noise_ops, sens, dt, basis, ids);

        const double level =
            std::holds_alternative<WhiteNoiseModel>(cfg.model)
                ? std::get<WhiteNoiseModel>(cfg.model).level
                : 1e-4;
        const double w_max =
            std::numbers::pi * cfg.n_sub / dt.minCoeff();
        const RVector grid =
            two_sided_grid(log_grid(1e-2 / dt.sum(), w_max, params.n_omega / 2));
        const Spectrum spectrum = [&] {
            std::vector<Spectrum> parts;
            for (const auto& id : ids)
                parts.push_back(Spectrum::white(level, grid, id));
            return Spectrum::diagonal(parts);
        }();

        // Monte Carlo
        {
            BenchRow row{d, "mc", 0, 0, 0, mc_timed_out};
            if (!mc_timed_out) {
                const auto t0 = clock::now();
                const McEstimate est = mc_entanglement_fidelity(pulse, cfg);
                row.wall_seconds = std::chrono::duration<double>(clock::now() - t0)
                                       .count();
                row.estimate = 1.0 - est.mean;
                row.std_error = est.std_error;
                mc_timed_out = row.wall_seconds > params.timeout_seconds;
            }
            result.rows.push_back(row);
        }
        // filter functions, Liouville path
        {
            BenchRow row{d, "ff_liouville", 0, 0, 0, ff_timed_out};
            if (!ff_timed_out) {
                const auto t0 = clock::now();
                const auto cm =
                    detail::compute_single_pulse_control_matrix(pulse, grid);
                const auto infid =
                    infidelity(cm, spectrum, d, InfidelityMethod::GammaTrace);
                row.wall_seconds = std::chrono::duration<double>(clock::now() - t0)
                                       .count();
                for (const auto& [key, v] : infid) row.estimate += v;
                ff_timed_out = row.wall_seconds > params.timeout_seconds;
            }
            result.rows.push_back(row);
        }
        // filter functions, conjugation path
        {
            BenchRow row{d, "ff_conjugation", 0, 0, 0, conj_timed_out};
            if (!conj_timed_out) {
                const auto t0 = clock::now();
                const RMatrix f = fidelity_filter_function_direct(pulse, grid);
                const RVector weights =
                    trapezoid_weights(grid) / (2.0 * std::numbers::pi);
                for (int a = 0; a < params.n_noise_ops; ++a) {
                    const CVector sw = spectrum.values_on(a, a, grid);
                    double acc = 0;
                    for (int w = 0; w < grid.size(); ++w)
                        acc += weights(w) * sw(w).real() * f(a, w);
                    row.estimate += acc / d;
                }
                row.wall_seconds = std::chrono::duration<double>(clock::now() - t0)
                                       .count();
                conj_timed_out = row.wall_seconds > params.timeout_seconds;
            }
            result.rows.push_back(row);
        }
    }
    for (const char* m : {"mc", "ff_liouville", "ff_conjugation"})
        result.fits.push_back(fit_loglog(m, result.rows));
    return result;
}

}  // namespace qff
