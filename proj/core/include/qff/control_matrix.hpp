#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qff/pulse.hpp"
#include "qff/types.hpp"

namespace qff {

/// Frequency-domain control matrix B_{ak}(w): the Fourier transform of
/// the expansion coefficients of the interaction-picture noise operators
/// in the operator basis. Stored as one (n_sources x d^2) slice per
/// frequency. Column 0 vanishes for traceless noise Hamiltonians and
/// identity-first bases.
class ControlMatrix {
public:
    ControlMatrix(RVector omega, std::vector<CMatrix> slices,
                  std::vector<std::string> source_ids, int dim);

    const RVector& omega() const { return omega_; }
    int n_omega() const { return static_cast<int>(omega_.size()); }
    int n_sources() const { return static_cast<int>(ids_.size()); }
    int n_basis() const { return dim_ * dim_; }
    int dim() const { return dim_; }
    const std::vector<std::string>& source_ids() const { return ids_; }

    /// (n_sources x d^2) slice at frequency index w.
    const CMatrix& slice(int w) const { return slices_[w]; }
    Complex at(int alpha, int k, int w) const { return slices_[w](alpha, k); }

    /// True when this matrix was computed on exactly this grid.
    bool same_grid(const RVector& omega) const;

private:
    RVector omega_;
    std::vector<CMatrix> slices_;
    std::vector<std::string> ids_;
    int dim_;
};

namespace detail {
/// Uncached single-pulse computation via per-segment eigendecomposition;
/// used by PulseSequence::control_matrix.
ControlMatrix compute_single_pulse_control_matrix(const PulseSequence& p,
                                                  const RVector& omega);
}  // namespace detail

/// Control matrix of a single pulse; cached on the pulse keyed by the
/// exact frequency grid.
std::shared_ptr<const ControlMatrix> single_pulse_control_matrix(
    const PulseSequence& p, const RVector& omega);

struct ConcatResult {
    PulseSequence pulse;  // time-domain concatenation with merged segments
    std::shared_ptr<const ControlMatrix> control;
};

/// Concatenates pulses in order. Control matrices of the parts are taken
/// from their caches (computed on demand) and composed through the
/// Liouville representations of the cumulative ideal propagators; the
/// result is cached on the returned pulse.
ConcatResult concatenate(const std::vector<const PulseSequence*>& pulses,
                         const RVector& omega);
ConcatResult concatenate(const std::vector<PulseSequence>& pulses,
                         const RVector& omega);
inline ConcatResult concatenate(std::initializer_list<const PulseSequence*> pulses,
                                const RVector& omega) {
    return concatenate(std::vector<const PulseSequence*>(pulses), omega);
}

/// Control matrix of `repetitions` back-to-back repetitions of p, using
/// the closed-form Neumann series; falls back to an explicit geometric
/// sum (divide and conquer, O(log G) multiplies) at frequencies where
/// 1 - e^{iwT} Q is singular.
ControlMatrix concatenate_periodic(const PulseSequence& p, const RVector& omega,
                                   long repetitions);

/// Fidelity filter function F_a(w) = sum_k |B_ak(w)|^2, one row per
/// noise source. Real and nonnegative.
RMatrix fidelity_filter_function(const ControlMatrix& cm);

/// Fidelity filter function straight from the pulse. Uses the Liouville
/// path for small dimensions and conjugation by unitaries on the Hilbert
/// space above the threshold set below.
RMatrix fidelity_filter_function(const PulseSequence& p, const RVector& omega);

/// Hilbert-space (conjugation) evaluation; agrees with the Liouville
/// path to 1e-10 but never materializes the control matrix.
RMatrix fidelity_filter_function_direct(const PulseSequence& p,
                                        const RVector& omega);

/// Dimension above which fidelity_filter_function(pulse, omega) switches
/// to the conjugation path (default 16).
void set_conjugation_threshold(int dim);
int conjugation_threshold();

/// Generalized filter function F_{ab,kl}(w) = conj(B_ak(w)) B_bl(w),
/// stored as one ((n_a d^2) x (n_a d^2)) matrix per frequency.
class GeneralizedFF {
public:
    GeneralizedFF(RVector omega, std::vector<CMatrix> slices, int n_sources,
                  int n_basis);
    const RVector& omega() const { return omega_; }
    int n_sources() const { return n_sources_; }
    int n_basis() const { return n_basis_; }
    const CMatrix& slice(int w) const { return slices_[w]; }
    Complex at(int a, int b, int k, int l, int w) const {
        return slices_[w](a * n_basis_ + k, b * n_basis_ + l);
    }

private:
    RVector omega_;
    std::vector<CMatrix> slices_;
    int n_sources_, n_basis_;
};

GeneralizedFF generalized_filter_function(const ControlMatrix& cm);

/// Pulse correlation filter functions F^{(g g')}_{ab,kl}(w) for an
/// ordered list of pulses. Their sum over (g, g') equals the generalized
/// filter function of the concatenated sequence.
class PulseCorrelationFF {
public:
    PulseCorrelationFF(RVector omega, std::vector<CMatrix> slices, int n_pulses,
                       int n_sources, int n_basis);
    const RVector& omega() const { return omega_; }
    int n_pulses() const { return n_pulses_; }
    int n_sources() const { return n_sources_; }
    int n_basis() const { return n_basis_; }
    const CMatrix& slice(int g, int gp, int w) const {
        return slices_[(static_cast<std::size_t>(g) * n_pulses_ + gp) * n_omega_ + w];
    }
    Complex at(int g, int gp, int a, int b, int k, int l, int w) const {
        return slice(g, gp, w)(a * n_basis_ + k, b * n_basis_ + l);
    }

private:
    RVector omega_;
    std::vector<CMatrix> slices_;
    int n_pulses_, n_sources_, n_basis_, n_omega_;
};

PulseCorrelationFF pulse_correlation_filter_functions(
    const std::vector<const PulseSequence*>& pulses, const RVector& omega);

}  // namespace qff
