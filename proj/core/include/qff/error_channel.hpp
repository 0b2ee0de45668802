#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qff/basis.hpp"
#include "qff/control_matrix.hpp"
#include "qff/pulse.hpp"
#include "qff/spectrum.hpp"
#include "qff/types.hpp"

namespace qff {

namespace detail {
/// Nested same-segment integral
///   I(w) = int_0^dt dt1 e^{i (Omega_ij - w) t1} int_0^t1 dt2 e^{i (Omega_mn + w) t2}
/// evaluated by its three-branch closed form (generic, singly resonant at
/// w + Omega_mn = 0, doubly resonant dt^2/2). Exposed for validation
/// against quadrature.
Complex magnus_nested_integral(double w, double omega_ij, double omega_mn,
                               double dt);
}  // namespace detail

/// One (d^2 x d^2) matrix per ordered noise-source pair (a, b); used for
/// both decay amplitudes Gamma and frequency shifts Delta. Retains the
/// per-pair contributions for diagnostics; total() sums them.
class SourcePairMatrices {
public:
    SourcePairMatrices(int n_sources, int n_basis);

    int n_sources() const { return n_src_; }
    int n_basis() const { return n_basis_; }
    const CMatrix& pair(int a, int b) const { return data_[a * n_src_ + b]; }
    CMatrix& pair(int a, int b) { return data_[a * n_src_ + b]; }
    CMatrix total() const;

private:
    int n_src_, n_basis_;
    std::vector<CMatrix> data_;
};

using DecayAmplitudes = SourcePairMatrices;
using FrequencyShifts = SourcePairMatrices;

/// Decay amplitudes
///   Gamma_{ab,kl} = int dw/2pi conj(B_ak(w)) S_ab(w) B_bl(w)
/// by trapezoidal quadrature on the control matrix grid. Hermitian under
/// (a,k) <-> (b,l) exchange with conjugation. Sources are matched by id;
/// a missing label or an uncovered grid is an error.
DecayAmplitudes decay_amplitudes(const ControlMatrix& cm, const Spectrum& s);

/// Second-order (Magnus) frequency shifts Delta_{ab,kl} on the given
/// grid, combining the cross-segment term with the nested same-segment
/// integrals (three-branch closed forms).
FrequencyShifts frequency_shifts(const PulseSequence& p, const Spectrum& s,
                                 const RVector& omega);

/// Liouville representation of the cumulant function,
///   K_ij = -1/2 sum_kl (f_ijkl Delta_kl + g_ijkl Gamma_kl),
/// contracted against the basis trace tensor. Pass delta = nullptr for
/// the leading-order incoherent channel. gamma/delta are the totals
/// (summed over source pairs).
CMatrix cumulant_function(const CMatrix& gamma, const CMatrix* delta,
                          const Basis& basis);

/// Single-qubit Pauli-basis shortcut:
///   K_ii = -sum_{k != i} Gamma_kk,
///   K_ij = -Delta_ij + Delta_ji + Gamma_ji  (i != j, i,j > 0),
/// borders zero. (Physical decay amplitudes are real symmetric once
/// summed over sources, so the Gamma transpose is then immaterial.)
CMatrix cumulant_function_pauli(const CMatrix& gamma,
                                const CMatrix* delta = nullptr);

enum class TransferMode { Exact, FirstOrder };

/// Error transfer matrix <U~> = exp(K) (Exact) or 1 + K (FirstOrder).
/// Row and column 0 of a zero-bordered K are preserved exactly.
CMatrix error_transfer_matrix(const CMatrix& cumulant, TransferMode mode);

struct ErrorChannelOptions {
    bool with_frequency_shifts = false;  // coherent shifts are opt-in
    TransferMode mode = TransferMode::Exact;
};

/// Everything derived from one (pulse, spectrum, grid) combination.
struct ErrorChannel {
    DecayAmplitudes gamma;
    std::optional<FrequencyShifts> delta;
    CMatrix cumulant;
    CMatrix transfer;
};

ErrorChannel compute_error_channel(const PulseSequence& p, const Spectrum& s,
                                   const RVector& omega,
                                   const ErrorChannelOptions& opts = {});

}  // namespace qff
