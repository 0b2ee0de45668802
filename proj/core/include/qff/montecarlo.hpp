#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "qff/pulse.hpp"
#include "qff/types.hpp"

namespace qff {

struct WhiteNoiseModel {
    double level = 0.0;  // S(w) = level
};

struct PowerLawNoiseModel {
    double amplitude = 0.0;
    double exponent = 1.0;
    double ir_cutoff = 0.0;  // S = 0 below (angular frequency)
    double uv_cutoff = std::numeric_limits<double>::infinity();
};

using NoiseModel = std::variant<WhiteNoiseModel, PowerLawNoiseModel>;

/// Monte Carlo configuration. n_sub sub-steps per pulse segment set the
/// sampling band, f_UV ~ n_sub / dt. Identical seed and config reproduce
/// trajectories bit-identically; trajectories use counter-based per-stream
/// seeding so results do not depend on thread scheduling.
struct McConfig {
    int n_traj = 1000;
    int n_sub = 64;
    std::uint64_t seed = 0;
    NoiseModel model = WhiteNoiseModel{};
};

/// Noise samples indexed (trajectory, source, step) on a uniform
/// sub-step grid.
class TrajectorySet {
public:
    TrajectorySet(int n_traj, int n_sources, int n_steps)
        : n_traj_(n_traj),
          n_src_(n_sources),
          n_steps_(n_steps),
          data_(static_cast<std::size_t>(n_traj) * n_sources * n_steps, 0.0) {}

    int n_traj() const { return n_traj_; }
    int n_sources() const { return n_src_; }
    int n_steps() const { return n_steps_; }
    double at(int t, int a, int s) const { return data_[index(t, a, s)]; }
    double& at(int t, int a, int s) { return data_[index(t, a, s)]; }

private:
    std::size_t index(int t, int a, int s) const {
        return (static_cast<std::size_t>(t) * n_src_ + a) * n_steps_ + s;
    }
    int n_traj_, n_src_, n_steps_;
    std::vector<double> data_;
};

/// Draws noise trajectories with the band convention
/// Var[b] = int dw/2pi S(w) over the sampled band [-pi/dt_sub, pi/dt_sub].
/// White noise is sampled i.i.d.; colored noise is synthesized by
/// frequency-domain shaping of white Gaussian samples with sqrt(S(w)).
TrajectorySet sample_trajectories(const McConfig& cfg, int n_sources,
                                  int total_steps, double dt_sub);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int n_traj = 0;
};

/// Independent oracle: propagates each noise trajectory exactly
/// (eigendecomposition per constant sub-step) and averages the
/// entanglement-fidelity estimator |tr(Q^dag U)/d|^2.
McEstimate mc_entanglement_fidelity(const PulseSequence& p, const McConfig& cfg);

struct BenchRow {
    int dim = 0;
    std::string method;
    double wall_seconds = 0.0;
    double estimate = 0.0;  // infidelity
    double std_error = 0.0;
    bool skipped = false;
};

struct BenchFit {
    std::string method;
    double exponent = 0.0;   // b in t = a d^b
    double log_prefactor = 0.0;
    double residual = 0.0;   // rms residual of the log-log fit
};

struct BenchResult {
    std::vector<BenchRow> rows;
    std::vector<BenchFit> fits;
};

struct BenchParams {
    int n_omega = 300;
    int n_segments = 4;
    int n_noise_ops = 3;
    double timeout_seconds = 30.0;  // per cell; larger dims are skipped
};

/// Wall-time comparison of the Monte Carlo estimator against the
/// filter-function paths (Liouville and conjugation) across dimensions,
/// with log-log least-squares exponents. Report only; results are
/// hardware dependent.
BenchResult scaling_benchmark(const std::vector<int>& dims, const McConfig& cfg,
                              const BenchParams& params);

}  // namespace qff
