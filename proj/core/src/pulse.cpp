#include "qff/pulse.hpp"

#include <cmath>
#include <mutex>

#include <Eigen/Eigenvalues>

#include "qff/control_matrix.hpp"

namespace qff {

struct PulseSequence::Cache {
    std::mutex mutex;
    std::optional<std::vector<Eigensystem>> eigensystems;
    std::optional<Propagators> propagators;
    std::optional<RMatrix> total_liouville;
    std::vector<std::shared_ptr<const ControlMatrix>> control_matrices;
};

PulseSequence::PulseSequence(std::vector<CMatrix> control_ops,
                             RMatrix control_coeffs, std::vector<CMatrix> noise_ops,
                             RMatrix noise_sens, RVector dt,
                             std::shared_ptr<const Basis> basis,
                             std::vector<std::string> noise_ids)
    : control_ops_(std::move(control_ops)),
      control_coeffs_(std::move(control_coeffs)),
      noise_ops_(std::move(noise_ops)),
      noise_sens_(std::move(noise_sens)),
      dt_(std::move(dt)),
      basis_(std::move(basis)),
      noise_ids_(std::move(noise_ids)),
      cache_(std::make_shared<Cache>()) {
    if (!basis_) throw ValidationError("pulse: basis is required");
    dim_ = basis_->dim();

    const int g = static_cast<int>(dt_.size());
    if (g < 1) throw ValidationError("pulse: need at least one segment");
    for (int i = 0; i < g; ++i)
        if (!(dt_(i) > 0))
            throw ValidationError("pulse: segment durations must be positive");

    if (control_coeffs_.size() == 0 && !control_ops_.empty())
        throw ValidationError("pulse: control coefficient shape mismatch");
    if (static_cast<int>(control_ops_.size()) != control_coeffs_.rows() &&
        !(control_ops_.empty() && control_coeffs_.rows() == 0))
        throw ValidationError("pulse: control coefficient shape mismatch");
    if (!control_ops_.empty() && control_coeffs_.cols() != g)
        throw ValidationError("pulse: control coefficients must have one column "
                              "per segment");
    if (static_cast<int>(noise_ops_.size()) != noise_sens_.rows() &&
        !(noise_ops_.empty() && noise_sens_.rows() == 0))
        throw ValidationError("pulse: noise sensitivity shape mismatch");
    if (!noise_ops_.empty() && noise_sens_.cols() != g)
        throw ValidationError("pulse: noise sensitivities must have one column "
                              "per segment");

    for (const auto& op : control_ops_) {
        if (op.rows() != dim_ || op.cols() != dim_)
            throw ValidationError("pulse: control operator dimension mismatch");
        if (!num::is_hermitian(op, 1e-12))
            throw ValidationError("pulse: control operator is not Hermitian");
    }
    for (const auto& op : noise_ops_) {
        if (op.rows() != dim_ || op.cols() != dim_)
            throw ValidationError("pulse: noise operator dimension mismatch");
        if (!num::is_hermitian(op, 1e-12))
            throw ValidationError("pulse: noise operator is not Hermitian");
        if (std::abs(op.trace()) > 1e-12)
            throw ValidationError("pulse: noise operator is not traceless");
    }

    if (noise_ids_.empty())
        for (std::size_t i = 0; i < noise_ops_.size(); ++i)
            noise_ids_.push_back(std::to_string(i));
    if (noise_ids_.size() != noise_ops_.size())
        throw ValidationError("pulse: one id per noise operator required");
    for (std::size_t i = 0; i < noise_ids_.size(); ++i)
        for (std::size_t j = i + 1; j < noise_ids_.size(); ++j)
            if (noise_ids_[i] == noise_ids_[j])
                throw ValidationError("pulse: duplicate noise id '" + noise_ids_[i] +
                                      "'");
}

CMatrix PulseSequence::segment_hamiltonian(int g) const {
    CMatrix h = CMatrix::Zero(dim_, dim_);
    for (std::size_t i = 0; i < control_ops_.size(); ++i)
        h += control_coeffs_(static_cast<int>(i), g) * control_ops_[i];
    return h;
}

const std::vector<Eigensystem>& PulseSequence::eigensystems() const {
    std::lock_guard lock(cache_->mutex);
    if (!cache_->eigensystems) {
        std::vector<Eigensystem> out;
        out.reserve(n_segments());
        for (int g = 0; g < n_segments(); ++g) {
            const CMatrix h = segment_hamiltonian(g);
            Eigensystem es;
            if (h.norm() == 0.0) {
                // canonicalize the trivial segment for reproducible caches
                es.values = RVector::Zero(dim_);
                es.vectors = CMatrix::Identity(dim_, dim_);
            } else {
                Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
                if (solver.info() != Eigen::Success)
                    throw NumericalError("pulse: eigensolver failed on segment " +
                                         std::to_string(g));
                es.values = solver.eigenvalues();
                es.vectors = solver.eigenvectors();
            }
            out.push_back(std::move(es));
        }
        cache_->eigensystems = std::move(out);
    }
    return *cache_->eigensystems;
}

const Propagators& PulseSequence::propagators() const {
    const auto& systems = eigensystems();
    std::lock_guard lock(cache_->mutex);
    if (!cache_->propagators) {
        Propagators props;
        props.t = RVector::Zero(n_segments() + 1);
        props.cumulative.push_back(CMatrix::Identity(dim_, dim_));
        for (int g = 0; g < n_segments(); ++g) {
            const auto& es = systems[g];
            CVector phases(dim_);
            for (int i = 0; i < dim_; ++i)
                phases(i) = std::exp(Complex(0.0, -es.values(i) * dt_(g)));
            CMatrix p = es.vectors * phases.asDiagonal() * es.vectors.adjoint();
            props.cumulative.push_back(p * props.cumulative.back());
            props.segment.push_back(std::move(p));
            props.t(g + 1) = props.t(g) + dt_(g);
        }
        cache_->propagators = std::move(props);
    }
    return *cache_->propagators;
}

const CMatrix& PulseSequence::total_propagator() const {
    return propagators().cumulative.back();
}

const RMatrix& PulseSequence::total_liouville() const {
    const CMatrix& q = total_propagator();
    std::lock_guard lock(cache_->mutex);
    if (!cache_->total_liouville) cache_->total_liouville = basis_->liouville(q);
    return *cache_->total_liouville;
}

std::shared_ptr<const ControlMatrix> PulseSequence::cached_control_matrix(
    const RVector& omega) const {
    std::lock_guard lock(cache_->mutex);
    for (const auto& cm : cache_->control_matrices)
        if (cm->same_grid(omega)) return cm;
    return nullptr;
}

std::vector<std::shared_ptr<const ControlMatrix>>
PulseSequence::cached_control_matrices() const {
    std::lock_guard lock(cache_->mutex);
    return cache_->control_matrices;
}

void PulseSequence::cache_control_matrix(
    std::shared_ptr<const ControlMatrix> cm) const {
    if (!cm) return;
    std::lock_guard lock(cache_->mutex);
    for (const auto& existing : cache_->control_matrices)
        if (existing->same_grid(cm->omega())) return;  // first one wins
    cache_->control_matrices.push_back(std::move(cm));
}

std::shared_ptr<const ControlMatrix> PulseSequence::control_matrix(
    const RVector& omega) const {
    if (auto cm = cached_control_matrix(omega)) return cm;
    auto cm = std::make_shared<const ControlMatrix>(
        detail::compute_single_pulse_control_matrix(*this, omega));
    cache_control_matrix(cm);
    return cached_control_matrix(omega);
}

PulseSequence extend_pulse(const PulseSequence& p,
                           const std::vector<int>& target_dims, int position) {
    if (p.basis().kind() != BasisKind::Pauli)
        throw ValidationError("extend_pulse: requires a separable (Pauli) basis");
    if (position < 0 || position >= static_cast<int>(target_dims.size()))
        throw ValidationError("extend_pulse: position out of range");

    int qubits_total = 0, qubits_before = 0;
    for (std::size_t i = 0; i < target_dims.size(); ++i) {
        const int d = target_dims[i];
        if (d < 1 || (d & (d - 1)) != 0)
            throw ValidationError("extend_pulse: subsystem dimensions must be "
                                  "powers of two");
        int q = 0;
        while ((1 << q) < d) ++q;
        qubits_total += q;
        if (static_cast<int>(i) < position) qubits_before += q;
    }
    if (target_dims[static_cast<std::size_t>(position)] != p.dim())
        throw ValidationError("extend_pulse: pulse dimension does not match its "
                              "slot");

    int qubits_orig = 0;
    while ((1 << qubits_orig) < p.dim()) ++qubits_orig;
    const int qubits_after = qubits_total - qubits_before - qubits_orig;
    const int d_total = 1 << qubits_total;
    const int d_other = d_total / p.dim();

    if (d_other == 1) return p;

    const CMatrix pre = CMatrix::Identity(1 << qubits_before, 1 << qubits_before);
    const CMatrix post = CMatrix::Identity(1 << qubits_after, 1 << qubits_after);
    auto embed = [&](const CMatrix& op) {
        return num::kron(num::kron(pre, op), post);
    };

    std::vector<CMatrix> control_ops, noise_ops;
    for (const auto& op : p.control_ops()) control_ops.push_back(embed(op));
    for (const auto& op : p.noise_ops()) noise_ops.push_back(embed(op));

    auto basis = std::make_shared<const Basis>(Basis::pauli(qubits_total));
    PulseSequence out(std::move(control_ops), p.control_coeffs(),
                      std::move(noise_ops), p.noise_sens(), p.dt(), basis,
                      p.noise_ids());

    // Remap cached control matrices: Pauli string digits of the original
    // index move to this slot's qubit positions, everything else is the
    // identity, and the normalized product basis contributes sqrt(d_other).
    auto remap = [&](int k) {
        int idx = 0;
        for (int q = 0; q < qubits_orig; ++q) {
            const int digit = (k >> (2 * (qubits_orig - 1 - q))) & 3;
            idx |= digit << (2 * (qubits_total - 1 - (qubits_before + q)));
        }
        return idx;
    };
    const double scale = std::sqrt(static_cast<double>(d_other));
    const int n_basis_old = p.dim() * p.dim();
    for (const auto& cm : p.cached_control_matrices()) {
        std::vector<CMatrix> slices(cm->n_omega());
        for (int w = 0; w < cm->n_omega(); ++w) {
            CMatrix s = CMatrix::Zero(cm->n_sources(), d_total * d_total);
            for (int k = 0; k < n_basis_old; ++k)
                s.col(remap(k)) = scale * cm->slice(w).col(k);
            slices[w] = std::move(s);
        }
        out.cache_control_matrix(std::make_shared<const ControlMatrix>(
            cm->omega(), std::move(slices), cm->source_ids(), d_total));
    }
    return out;
}

}  // namespace qff
