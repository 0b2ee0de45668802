#include "qff/basis.hpp"

#include <cmath>
#include <mutex>
#include <sstream>

#include <Eigen/SVD>

namespace qff {

namespace {

constexpr double kGeneratedTol = 1e-12;
constexpr double kCustomTol = 1e-10;
constexpr double kSparseDrop = 1e-14;

using num::kron;

struct SparseEntry {
    int row, col;
    Complex value;
};

std::vector<SparseEntry> sparsify(const CMatrix& m) {
    std::vector<SparseEntry> out;
    for (int c = 0; c < m.cols(); ++c)
        for (int r = 0; r < m.rows(); ++r)
            if (std::abs(m(r, c)) > kSparseDrop)
                out.push_back({r, c, m(r, c)});
    return out;
}

}  // namespace

TraceTensor::TraceTensor(int n_elements, std::vector<Entry> entries)
    : n_(n_elements), entries_(std::move(entries)) {
    index_.reserve(entries_.size());
    for (const auto& e : entries_) index_[key(e.i, e.j, e.k, e.l)] = e.value;
}

Complex TraceTensor::at(int i, int j, int k, int l) const {
    auto it = index_.find(key(i, j, k, l));
    return it == index_.end() ? Complex(0.0, 0.0) : it->second;
}

struct Basis::Cache {
    std::once_flag once;
    std::shared_ptr<const TraceTensor> tensor;
};

Basis::Basis(std::vector<CMatrix> elements, int dim, BasisKind kind)
    : elements_(std::move(elements)),
      dim_(dim),
      kind_(kind),
      cache_(std::make_shared<Cache>()) {
    const CMatrix id =
        CMatrix::Identity(dim_, dim_) / std::sqrt(static_cast<double>(dim_));
    identity_first_ = !elements_.empty() && (elements_[0] - id).norm() <= 1e-10;
}

void Basis::validate() const {
    const double tol = kind_ == BasisKind::Custom ? kCustomTol : kGeneratedTol;
    const int n = size();
    const int d = dim_;
    if (n != d * d)
        throw ValidationError("basis must have dim^2 elements, got " +
                              std::to_string(n));
    for (int k = 0; k < n; ++k) {
        if (elements_[k].rows() != d || elements_[k].cols() != d)
            throw ValidationError("basis element " + std::to_string(k) +
                                  " has wrong shape");
        if (!num::is_hermitian(elements_[k], tol))
            throw ValidationError("basis element " + std::to_string(k) +
                                  " is not Hermitian");
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const Complex g = (elements_[i].adjoint() * elements_[j]).trace();
            const double target = i == j ? 1.0 : 0.0;
            if (std::abs(g - target) > tol) {
                std::ostringstream os;
                os << "basis not orthonormal: |tr(C_" << i << "^dag C_" << j
                   << ") - " << target << "| = " << std::abs(g - target);
                throw ValidationError(os.str());
            }
        }
    // Completeness: sum_k C_{k,ba} C_{k,cd} = delta_ac delta_bd
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c)
                for (int e = 0; e < d; ++e) {
                    Complex s(0, 0);
                    for (int k = 0; k < n; ++k)
                        s += elements_[k](b, a) * elements_[k](c, e);
                    const double target = (a == c && b == e) ? 1.0 : 0.0;
                    if (std::abs(s - target) > tol)
                        throw ValidationError("basis completeness identity violated");
                }
    if (kind_ != BasisKind::Custom) {
        if (!identity_first_)
            throw ValidationError("generated basis must start with identity/sqrt(d)");
        for (int k = 1; k < n; ++k)
            if (std::abs(elements_[k].trace()) > tol)
                throw ValidationError("generated basis element " + std::to_string(k) +
                                      " is not traceless");
    }
}

Basis Basis::pauli(int n_qubits) {
    if (n_qubits < 1) throw ValidationError("pauli basis requires n_qubits >= 1");
    if (n_qubits > 6 || (1 << (2 * n_qubits)) > max_elements)
        throw ValidationError("pauli basis dimension overflow: 4^" +
                              std::to_string(n_qubits) + " elements exceed limit");
    const double s = 1.0 / std::sqrt(2.0);
    std::vector<CMatrix> sigma(4, CMatrix(2, 2));
    sigma[0] << s, 0, 0, s;
    sigma[1] << 0, s, s, 0;
    sigma[2] << 0, Complex(0, -s), Complex(0, s), 0;
    sigma[3] << s, 0, 0, -s;

    const int n_el = 1 << (2 * n_qubits);
    std::vector<CMatrix> elements;
    elements.reserve(n_el);
    for (int idx = 0; idx < n_el; ++idx) {
        // base-4 digits, most significant digit = first qubit
        CMatrix m = sigma[(idx >> (2 * (n_qubits - 1))) & 3];
        for (int q = 1; q < n_qubits; ++q)
            m = kron(m, sigma[(idx >> (2 * (n_qubits - 1 - q))) & 3]);
        elements.push_back(std::move(m));
    }
    Basis b(std::move(elements), 1 << n_qubits, BasisKind::Pauli);
    b.validate();
    return b;
}

Basis Basis::ggm(int dim) {
    if (dim < 2) throw ValidationError("ggm basis requires dim >= 2");
    if (dim * dim > max_elements)
        throw ValidationError("ggm basis dimension overflow");
    std::vector<CMatrix> elements;
    elements.reserve(dim * dim);
    elements.push_back(CMatrix::Identity(dim, dim) /
                       std::sqrt(static_cast<double>(dim)));
    const double s = 1.0 / std::sqrt(2.0);
    // symmetric u_jk, ascending (j,k)
    for (int j = 0; j < dim; ++j)
        for (int k = j + 1; k < dim; ++k) {
            CMatrix m = CMatrix::Zero(dim, dim);
            m(j, k) = s;
            m(k, j) = s;
            elements.push_back(std::move(m));
        }
    // antisymmetric v_jk
    for (int j = 0; j < dim; ++j)
        for (int k = j + 1; k < dim; ++k) {
            CMatrix m = CMatrix::Zero(dim, dim);
            m(j, k) = Complex(0, -s);
            m(k, j) = Complex(0, s);
            elements.push_back(std::move(m));
        }
    // diagonal w_l, l = 1..d-1
    for (int l = 1; l < dim; ++l) {
        CMatrix m = CMatrix::Zero(dim, dim);
        const double norm = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
        for (int q = 0; q < l; ++q) m(q, q) = norm;
        m(l, l) = -static_cast<double>(l) * norm;
        elements.push_back(std::move(m));
    }
    Basis b(std::move(elements), dim, BasisKind::GGM);
    b.validate();
    return b;
}

Basis Basis::complete(const std::vector<CMatrix>& partial) {
    if (partial.empty()) throw ValidationError("complete: empty input");
    const int d = static_cast<int>(partial[0].rows());
    const int m = static_cast<int>(partial.size());
    if (m > d * d) throw ValidationError("complete: more elements than dim^2");
    for (int i = 0; i < m; ++i) {
        if (partial[i].rows() != d || partial[i].cols() != d)
            throw ValidationError("complete: inconsistent element shapes");
        if (!num::is_hermitian(partial[i], kCustomTol))
            throw ValidationError("complete: element " + std::to_string(i) +
                                  " is not Hermitian");
    }
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            const Complex g = (partial[i].adjoint() * partial[j]).trace();
            if (std::abs(g - (i == j ? 1.0 : 0.0)) > kCustomTol)
                throw ValidationError("complete: input not orthonormal");
        }

    std::vector<CMatrix> elements = partial;
    if (m < d * d) {
        const Basis ref = Basis::ggm(d);
        RMatrix coeff(m, d * d);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < d * d; ++j)
                coeff(i, j) = (partial[i] * ref.element(j)).trace().real();
        Eigen::JacobiSVD<RMatrix> svd(coeff, Eigen::ComputeFullV);
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-10) ++rank;
        if (rank < m)
            throw ValidationError("complete: input elements are linearly dependent "
                                  "(SVD rank " + std::to_string(rank) + " < " +
                                  std::to_string(m) + ")");
        const RMatrix& v = svd.matrixV();  // d^2 x d^2
        for (int c = m; c < d * d; ++c) {
            CMatrix el = CMatrix::Zero(d, d);
            for (int j = 0; j < d * d; ++j) el += ref.element(j) * v(j, c);
            elements.push_back(std::move(el));
        }
    }
    Basis b(std::move(elements), d, BasisKind::Custom);
    b.validate();
    return b;
}

Basis Basis::custom(std::vector<CMatrix> elements) {
    if (elements.empty()) throw ValidationError("custom basis: empty element list");
    const int d = static_cast<int>(elements[0].rows());
    Basis b(std::move(elements), d, BasisKind::Custom);
    b.validate();
    return b;
}

CVector Basis::expand(const CMatrix& a) const {
    CVector v(size());
    for (int k = 0; k < size(); ++k) v(k) = (elements_[k] * a).trace();
    return v;
}

RVector Basis::expand_hermitian(const CMatrix& a) const {
    const CVector v = expand(a);
    if (v.imag().cwiseAbs().maxCoeff() > 1e-9 * (1.0 + a.norm()))
        throw ValidationError("expand_hermitian: operator is not Hermitian");
    return v.real();
}

RMatrix Basis::liouville(const CMatrix& u) const {
    if (u.rows() != dim_ || u.cols() != dim_)
        throw ValidationError("liouville: unitary has wrong dimension");
    if (!num::is_unitary(u, 1e-10))
        throw ValidationError("liouville: input is not unitary");
    const int n = size();
    // rows of bt are vec(C_i^T), columns of am are vec(U C_j U^dag)
    CMatrix bt(n, n), am(n, n);
    for (int i = 0; i < n; ++i) {
        const CMatrix t = elements_[i].transpose();
        bt.row(i) = Eigen::Map<const CVector>(t.data(), n).transpose();
    }
    const CMatrix ud = u.adjoint();
    for (int j = 0; j < n; ++j) {
        const CMatrix a = u * elements_[j] * ud;
        am.col(j) = Eigen::Map<const CVector>(a.data(), n);
    }
    return (bt * am).real();
}

const TraceTensor& Basis::trace_tensor() const {
    std::call_once(cache_->once, [this] {
        const int n = size();
        const int d = dim_;
        // pairwise products C_i C_j in sparse form
        std::vector<std::vector<SparseEntry>> products(
            static_cast<std::size_t>(n) * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                products[static_cast<std::size_t>(i) * n + j] =
                    sparsify(elements_[i] * elements_[j]);
        // position -> list of (pair index, value)
        std::vector<std::vector<std::pair<int, Complex>>> at_pos(
            static_cast<std::size_t>(d) * d);
        for (int p = 0; p < n * n; ++p)
            for (const auto& e : products[p])
                at_pos[static_cast<std::size_t>(e.row) * d + e.col].emplace_back(
                    p, e.value);
        // T_{ijkl} = sum_ab (C_i C_j)_{ab} (C_k C_l)_{ba}
        std::unordered_map<std::uint64_t, Complex> acc;
        constexpr std::size_t kMaxEntries = std::size_t(1) << 25;
        for (int p1 = 0; p1 < n * n; ++p1) {
            for (const auto& e : products[p1]) {
                const auto& matches =
                    at_pos[static_cast<std::size_t>(e.col) * d + e.row];
                for (const auto& [p2, w] : matches) {
                    acc[(static_cast<std::uint64_t>(p1) << 32) |
                        static_cast<std::uint64_t>(p2)] += e.value * w;
                }
            }
            if (acc.size() > kMaxEntries)
                throw NumericalError(
                    "trace tensor exceeds memory limit for this dense basis; "
                    "use a GGM basis instead");
        }
        std::vector<TraceTensor::Entry> entries;
        entries.reserve(acc.size());
        for (const auto& [k, v] : acc) {
            if (std::abs(v) <= kSparseDrop) continue;
            const int p1 = static_cast<int>(k >> 32);
            const int p2 = static_cast<int>(k & 0xffffffffu);
            entries.push_back({p1 / n, p1 % n, p2 / n, p2 % n, v});
        }
        cache_->tensor = std::make_shared<TraceTensor>(n, std::move(entries));
    });
    return *cache_->tensor;
}

}  // namespace qff
