#pragma once

#include <memory>
#include <unordered_map>
#include <vector>

#include "qff/types.hpp"

namespace qff {

/// Sparse fourth-order trace tensor T_ijkl = tr(C_i C_j C_k C_l) of an
/// operator basis. Entries with |T| <= 1e-14 are dropped.
class TraceTensor {
public:
    struct Entry {
        int i, j, k, l;
        Complex value;
    };

    TraceTensor(int n_elements, std::vector<Entry> entries);

    int n_elements() const { return n_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t nnz() const { return entries_.size(); }

    Complex at(int i, int j, int k, int l) const;

private:
    static std::uint64_t key(int i, int j, int k, int l) {
        return (static_cast<std::uint64_t>(i) << 48) |
               (static_cast<std::uint64_t>(j) << 32) |
               (static_cast<std::uint64_t>(k) << 16) |
               static_cast<std::uint64_t>(l);
    }

    int n_;
    std::vector<Entry> entries_;
    std::unordered_map<std::uint64_t, Complex> index_;
};

enum class BasisKind { Pauli, GGM, Custom };

/// Ordered orthonormal Hermitian operator basis {C_0, ..., C_{d^2-1}}
/// with tr(C_i C_j) = delta_ij. Generated bases put the normalized
/// identity first; the remaining elements are traceless.
///
/// Immutable after construction. The trace tensor is built lazily with
/// compute-once semantics, so concurrent readers are safe.
class Basis {
public:
    /// n-qubit Pauli basis: all n-fold tensor products of
    /// {1, sx, sy, sz}/sqrt(2), ordered lexicographically, identity first.
    static Basis pauli(int n_qubits);

    /// Generalized Gell-Mann basis of dimension d: identity/sqrt(d),
    /// then symmetric u_jk, antisymmetric v_jk (each ascending in (j,k)),
    /// then diagonal w_l ascending in l.
    static Basis ggm(int dim);

    /// Completes a mutually orthonormal Hermitian set to a full basis.
    /// The input elements come first, in order; the remaining ones are an
    /// orthonormal null-space basis obtained by expanding the input in a
    /// reference GGM basis and applying an SVD.
    static Basis complete(const std::vector<CMatrix>& partial);

    /// Wraps user-supplied elements after validating orthonormality,
    /// Hermiticity and completeness.
    static Basis custom(std::vector<CMatrix> elements);

    int dim() const { return dim_; }
    int size() const { return static_cast<int>(elements_.size()); }  // d^2
    BasisKind kind() const { return kind_; }
    const CMatrix& element(int k) const { return elements_[k]; }
    const std::vector<CMatrix>& elements() const { return elements_; }

    /// True when the first element is proportional to the identity.
    bool identity_first() const { return identity_first_; }

    /// Expansion coefficients tr(C_k A) of an arbitrary operator.
    CVector expand(const CMatrix& a) const;

    /// Real expansion coefficients of a Hermitian operator (imaginary
    /// parts are discarded after a tolerance check).
    RVector expand_hermitian(const CMatrix& a) const;

    /// Liouville (transfer matrix) representation of the unitary channel
    /// rho -> U rho U^dag: L_ij = tr(C_i^dag U C_j U^dag). Real for
    /// Hermitian bases.
    RMatrix liouville(const CMatrix& u) const;

    /// Lazily built, cached trace tensor.
    const TraceTensor& trace_tensor() const;

    /// Maximum allowed d^2 before the constructors refuse (resource guard).
    static constexpr int max_elements = 4096;

private:
    struct Cache;

    Basis(std::vector<CMatrix> elements, int dim, BasisKind kind);
    void validate() const;

    std::vector<CMatrix> elements_;
    int dim_ = 0;
    BasisKind kind_ = BasisKind::Custom;
    bool identity_first_ = false;
    std::shared_ptr<Cache> cache_;  // shared across copies
};

/// Free-function spelling of Basis::liouville.
inline RMatrix liouville_of_unitary(const CMatrix& u, const Basis& basis) {
    return basis.liouville(u);
}

}  // namespace qff
