#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qff/basis.hpp"
#include "qff/types.hpp"

namespace qff {

class ControlMatrix;

/// Eigendecomposition of one segment's control Hamiltonian.
struct Eigensystem {
    RVector values;   // omega_i
    CMatrix vectors;  // columns are eigenvectors
};

/// Segment propagators P_g and cumulative propagators Q_g = P_g ... P_1
/// (Q_0 = identity), plus segment start times.
struct Propagators {
    std::vector<CMatrix> segment;     // P_1..P_G
    std::vector<CMatrix> cumulative;  // Q_0..Q_G
    RVector t;                        // t_0 = 0 .. t_G = tau
};

/// Piecewise-constant control and noise Hamiltonian description:
///   H(t) = sum_i a_i^(g) A_i  +  sum_a b_a(t) s_a^(g) B_a
/// for t in segment g. All operators are Hermitian; noise operators are
/// additionally traceless. Coefficients are angular frequencies.
///
/// Immutable after validation. Eigensystems, propagators, and frequency
/// domain control matrices are cached lazily with compute-once semantics
/// and shared across copies, so concurrent reads are safe.
class PulseSequence {
public:
    PulseSequence(std::vector<CMatrix> control_ops, RMatrix control_coeffs,
                  std::vector<CMatrix> noise_ops, RMatrix noise_sens, RVector dt,
                  std::shared_ptr<const Basis> basis,
                  std::vector<std::string> noise_ids = {});

    int dim() const { return dim_; }
    int n_segments() const { return static_cast<int>(dt_.size()); }
    int n_control() const { return static_cast<int>(control_ops_.size()); }
    int n_noise() const { return static_cast<int>(noise_ops_.size()); }
    double duration() const { return dt_.sum(); }

    const std::vector<CMatrix>& control_ops() const { return control_ops_; }
    const RMatrix& control_coeffs() const { return control_coeffs_; }
    const std::vector<CMatrix>& noise_ops() const { return noise_ops_; }
    const RMatrix& noise_sens() const { return noise_sens_; }
    const RVector& dt() const { return dt_; }
    const Basis& basis() const { return *basis_; }
    std::shared_ptr<const Basis> basis_ptr() const { return basis_; }
    const std::vector<std::string>& noise_ids() const { return noise_ids_; }

    /// H_c during segment g (0-based).
    CMatrix segment_hamiltonian(int g) const;

    const std::vector<Eigensystem>& eigensystems() const;
    const Propagators& propagators() const;
    const CMatrix& total_propagator() const;  // Q_G
    const RMatrix& total_liouville() const;   // Liouville representation of Q_G

    /// Frequency-domain control matrix on the given grid; computed on
    /// first use and cached keyed by the exact (bitwise) grid.
    std::shared_ptr<const ControlMatrix> control_matrix(const RVector& omega) const;

    /// Cached control matrix for this exact grid, or nullptr.
    std::shared_ptr<const ControlMatrix> cached_control_matrix(
        const RVector& omega) const;

    /// Snapshot of all cached control matrices (one per grid).
    std::vector<std::shared_ptr<const ControlMatrix>> cached_control_matrices()
        const;

    /// Stores an externally computed control matrix (e.g. an analytic one
    /// or the result of a concatenation).
    void cache_control_matrix(std::shared_ptr<const ControlMatrix> cm) const;

private:
    struct Cache;

    std::vector<CMatrix> control_ops_;
    RMatrix control_coeffs_;
    std::vector<CMatrix> noise_ops_;
    RMatrix noise_sens_;
    RVector dt_;
    std::shared_ptr<const Basis> basis_;
    std::vector<std::string> noise_ids_;
    int dim_ = 0;
    std::shared_ptr<Cache> cache_;
};

/// Embeds a pulse into a larger tensor-product Hilbert space. target_dims
/// lists the subsystem dimensions of the composite space (powers of two;
/// the composite basis is the Pauli basis) and position selects the slot
/// occupied by the original pulse. Cached control matrices are remapped:
/// column k moves to the matching composite-basis index, scaled by
/// sqrt(d_other) where d_other is the dimension of the appended identity
/// factors.
PulseSequence extend_pulse(const PulseSequence& p, const std::vector<int>& target_dims,
                           int position);

}  // namespace qff
