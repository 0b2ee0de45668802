#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qff/basis.hpp"
#include "qff/control_matrix.hpp"
#include "qff/error_channel.hpp"
#include "qff/pulse.hpp"
#include "qff/spectrum.hpp"

namespace qff {

/// Average gate fidelity (tr <U~> + d) / (d (d + 1)) of a d^2 x d^2
/// error transfer matrix.
double avg_gate_fidelity(const CMatrix& transfer, int dim);

/// Entanglement fidelity tr <U~> / d^2.
double ent_fidelity(const CMatrix& transfer, int dim);

/// Subspace-restricted variant: sums <U~>_ii over the given Liouville
/// indices only (e.g. a zero-padded computational-subspace basis block,
/// optionally excluding the padded identity index) and treats sub_dim as
/// the subspace dimension.
double avg_gate_fidelity_subspace(const CMatrix& transfer, int sub_dim,
                                  const std::vector<int>& indices);

enum class InfidelityMethod { GammaTrace, FFIntegral };

/// First-order infidelities per source pair, keyed by (id_a, id_b).
/// GammaTrace evaluates tr Gamma_ab / d; FFIntegral evaluates
/// (1/d) int dw/2pi S_a(w) F_a(w) (diagonal pairs only). The two agree
/// to rounding on a shared grid.
std::map<std::pair<std::string, std::string>, double> infidelity(
    const ControlMatrix& cm, const Spectrum& s, int dim,
    InfidelityMethod method = InfidelityMethod::GammaTrace);

/// State fidelity <<rho| Q |sigma>> for a pure state rho and a state
/// sigma propagated by the transfer matrix Q.
double state_fidelity(const CMatrix& transfer, const CMatrix& rho,
                      const CMatrix& sigma, const Basis& basis);

/// Measurement probability <<E| Q |sigma>> for a POVM element E.
double povm_probability(const CMatrix& povm_element, const CMatrix& transfer,
                        const CMatrix& sigma, const Basis& basis);

struct LeakageRates {
    double leakage;  // L_c, out of the computational subspace
    double seepage;  // L_l, back into it
};

/// Wood-Gambetta leakage and seepage rates of a channel for a projector
/// onto the computational subspace. Unital channels satisfy
/// d_c L_c = d_l L_l.
LeakageRates leakage_rates(const CMatrix& transfer, const CMatrix& comp_projector,
                           const Basis& basis);

/// Convergence parameter
///   xi^2 = sum_a ||B_a||_F^2 (int dw/2pi S_a) (sum_g |s_a^g| dt_g)^2.
/// Bounds |tr Gamma| and the Magnus expansion; requires diagonal spectra.
/// Returns +inf when the band integral diverges (bound unreliable, not an
/// error).
double xi_squared(const PulseSequence& p, const Spectrum& s);

/// Magnus convergence criterion xi < pi / C_m. C_m relates the maximum
/// to the rms noise amplitude; it is not derivable from a spectrum, so it
/// is user-supplied (default 3, a ~3 sigma heuristic).
bool magnus_convergent(double xi_sq, double c_m = 3.0);

struct ChannelMetrics {
    double avg_fidelity = 1.0;
    double ent_fidelity = 1.0;
    std::map<std::pair<std::string, std::string>, double> infid_per_source;
    double xi_sq = 0.0;
};

/// Bundles the scalar figures of merit for one (pulse, spectrum, grid).
ChannelMetrics channel_metrics(const PulseSequence& p, const Spectrum& s,
                               const RVector& omega,
                               TransferMode mode = TransferMode::Exact);

}  // namespace qff
