#include "qff/control_matrix.hpp"

#include <atomic>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "qff/parallel.hpp"
#include "segment_frames.hpp"

namespace qff {

using internal::build_frames;
using internal::freq_integral;

ControlMatrix::ControlMatrix(RVector omega, std::vector<CMatrix> slices,
                             std::vector<std::string> source_ids, int dim)
    : omega_(std::move(omega)),
      slices_(std::move(slices)),
      ids_(std::move(source_ids)),
      dim_(dim) {
    if (static_cast<int>(slices_.size()) != omega_.size())
        throw ValidationError("control matrix: one slice per frequency required");
    for (const auto& s : slices_)
        if (s.rows() != static_cast<int>(ids_.size()) || s.cols() != dim_ * dim_)
            throw ValidationError("control matrix: slice shape mismatch");
}

bool ControlMatrix::same_grid(const RVector& omega) const {
    if (omega.size() != omega_.size()) return false;
    for (int i = 0; i < omega.size(); ++i)
        if (omega(i) != omega_(i)) return false;
    return true;
}

namespace detail {

ControlMatrix compute_single_pulse_control_matrix(const PulseSequence& p,
                                                  const RVector& omega) {
    if (omega.size() == 0)
        throw ValidationError("control matrix: empty frequency grid");
    const int d = p.dim();
    const int n = d * d;
    const int n_src = p.n_noise();
    const auto frames = build_frames(p, /*with_c_mat=*/true);

    std::vector<CMatrix> slices(omega.size());
    parallel_for(static_cast<std::size_t>(omega.size()), [&](std::size_t wi) {
        const double w = omega(static_cast<int>(wi));
        CMatrix slice = CMatrix::Zero(n_src, n);
        CMatrix integral(d, d);
        for (std::size_t g = 0; g < frames.size(); ++g) {
            const auto& f = frames[g];
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    integral(i, j) =
                        freq_integral(w + f.omega_diff(i, j), w, f.omega_diff(i, j),
                                      f.dt);
            const Complex phase = std::exp(Complex(0.0, w * f.t_start));
            for (int a = 0; a < n_src; ++a) {
                const double s = p.noise_sens()(a, static_cast<int>(g));
                if (s == 0.0) continue;
                const CMatrix had = f.b_bar[a].cwiseProduct(integral);
                slice.row(a) += (s * phase) *
                                (Eigen::Map<const CVector>(had.data(), n).transpose() *
                                 f.c_mat);
            }
        }
        slices[wi] = std::move(slice);
    });
    return ControlMatrix(omega, std::move(slices), p.noise_ids(), d);
}

}  // namespace detail

std::shared_ptr<const ControlMatrix> single_pulse_control_matrix(
    const PulseSequence& p, const RVector& omega) {
    return p.control_matrix(omega);
}

namespace {

void check_compatible(const std::vector<const PulseSequence*>& pulses) {
    if (pulses.empty()) throw ValidationError("concatenate: no pulses given");
    const PulseSequence& first = *pulses[0];
    for (const auto* pp : pulses) {
        const PulseSequence& p = *pp;
        if (p.dim() != first.dim())
            throw ValidationError("concatenate: dimension mismatch");
        if (p.basis_ptr() != first.basis_ptr()) {
            if (p.basis().size() != first.basis().size())
                throw ValidationError("concatenate: basis mismatch");
            for (int k = 0; k < first.basis().size(); ++k)
                if ((p.basis().element(k) - first.basis().element(k)).norm() > 1e-12)
                    throw ValidationError("concatenate: basis mismatch");
        }
        if (p.n_noise() != first.n_noise() || p.noise_ids() != first.noise_ids())
            throw ValidationError("concatenate: noise-set mismatch");
        for (int a = 0; a < first.n_noise(); ++a)
            if ((p.noise_ops()[a] - first.noise_ops()[a]).norm() > 1e-12)
                throw ValidationError("concatenate: noise-set mismatch");
    }
}

}  // namespace

ConcatResult concatenate(const std::vector<const PulseSequence*>& pulses,
                         const RVector& omega) {
    check_compatible(pulses);
    const PulseSequence& first = *pulses[0];
    const int d = first.dim();
    const int n = d * d;
    const int n_src = first.n_noise();

    int total_segments = 0;
    for (const auto* p : pulses) total_segments += p->n_segments();

    // merge the time domain: shared control operators are identified by
    // matrix equality, absent ones get zero coefficients
    std::vector<CMatrix> ops;
    std::vector<RVector> coeff_rows;
    RVector dt(total_segments);
    RMatrix sens(n_src, total_segments);
    int offset = 0;
    for (const auto* pp : pulses) {
        const PulseSequence& p = *pp;
        for (int i = 0; i < p.n_control(); ++i) {
            const CMatrix& op = p.control_ops()[i];
            int slot = -1;
            for (std::size_t j = 0; j < ops.size(); ++j)
                if ((ops[j] - op).norm() <= 1e-12 * std::max(1.0, op.norm())) {
                    slot = static_cast<int>(j);
                    break;
                }
            if (slot < 0) {
                ops.push_back(op);
                coeff_rows.push_back(RVector::Zero(total_segments));
                slot = static_cast<int>(ops.size()) - 1;
            }
            coeff_rows[slot].segment(offset, p.n_segments()) =
                p.control_coeffs().row(i);
        }
        dt.segment(offset, p.n_segments()) = p.dt();
        if (n_src > 0)
            sens.block(0, offset, n_src, p.n_segments()) = p.noise_sens();
        offset += p.n_segments();
    }
    RMatrix coeffs(static_cast<int>(ops.size()), total_segments);
    for (std::size_t i = 0; i < coeff_rows.size(); ++i)
        coeffs.row(static_cast<int>(i)) = coeff_rows[i];

    PulseSequence merged(std::move(ops), std::move(coeffs), first.noise_ops(),
                         std::move(sens), std::move(dt), first.basis_ptr(),
                         first.noise_ids());

    // frequency domain: B(w) = sum_g e^{iw t_{g-1}} B^(g)(w) Q^(g-1)
    std::vector<CMatrix> slices(omega.size(), CMatrix::Zero(n_src, n));
    RMatrix q_cum = RMatrix::Identity(n, n);
    double t_cum = 0.0;
    for (const auto* pp : pulses) {
        const auto cm = pp->control_matrix(omega);
        const CMatrix qc = q_cum.cast<Complex>();
        parallel_for(static_cast<std::size_t>(omega.size()), [&](std::size_t wi) {
            const Complex phase =
                std::exp(Complex(0.0, omega(static_cast<int>(wi)) * t_cum));
            slices[wi] += phase * (cm->slice(static_cast<int>(wi)) * qc);
        });
        q_cum = pp->total_liouville() * q_cum;
        t_cum += pp->duration();
    }
    auto cm = std::make_shared<const ControlMatrix>(omega, std::move(slices),
                                                    first.noise_ids(), d);
    merged.cache_control_matrix(cm);
    return ConcatResult{std::move(merged), std::move(cm)};
}

ConcatResult concatenate(const std::vector<PulseSequence>& pulses,
                         const RVector& omega) {
    std::vector<const PulseSequence*> ptrs;
    ptrs.reserve(pulses.size());
    for (const auto& p : pulses) ptrs.push_back(&p);
    return concatenate(ptrs, omega);
}

namespace {

CMatrix matrix_power(const CMatrix& m, long g) {
    CMatrix result = CMatrix::Identity(m.rows(), m.cols());
    CMatrix base = m;
    while (g > 0) {
        if (g & 1) result = result * base;
        g >>= 1;
        if (g) base = base * base;
    }
    return result;
}

// (sum_{g=0}^{G-1} M^g, M^G) with O(log G) multiplies
std::pair<CMatrix, CMatrix> geometric_sum(const CMatrix& m, long g) {
    if (g == 0)
        return {CMatrix::Zero(m.rows(), m.cols()),
                CMatrix::Identity(m.rows(), m.cols())};
    if (g == 1) return {CMatrix::Identity(m.rows(), m.cols()), m};
    auto [s, p] = geometric_sum(m, g / 2);
    CMatrix sum = s + p * s;
    CMatrix pow = p * p;
    if (g & 1) {
        sum += pow;
        pow = pow * m;
    }
    return {std::move(sum), std::move(pow)};
}

}  // namespace

ControlMatrix concatenate_periodic(const PulseSequence& p, const RVector& omega,
                                   long repetitions) {
    if (repetitions < 1)
        throw ValidationError("concatenate_periodic: repetitions must be >= 1");
    const auto cm1 = p.control_matrix(omega);
    const CMatrix liouville = p.total_liouville().cast<Complex>();
    const double period = p.duration();
    const int n = p.dim() * p.dim();
    const CMatrix eye = CMatrix::Identity(n, n);

    std::vector<CMatrix> slices(omega.size());
    parallel_for(static_cast<std::size_t>(omega.size()), [&](std::size_t wi) {
        const double w = omega(static_cast<int>(wi));
        const CMatrix m = std::exp(Complex(0.0, w * period)) * liouville;
        const CMatrix a = eye - m;
        Eigen::JacobiSVD<CMatrix> svd(a);
        CMatrix sum;
        if (svd.singularValues().minCoeff() < 1e-10) {
            sum = geometric_sum(m, repetitions).first;
        } else {
            sum = a.partialPivLu().solve(eye - matrix_power(m, repetitions));
        }
        slices[wi] = cm1->slice(static_cast<int>(wi)) * sum;
    });
    return ControlMatrix(omega, std::move(slices), p.noise_ids(), p.dim());
}

RMatrix fidelity_filter_function(const ControlMatrix& cm) {
    RMatrix f(cm.n_sources(), cm.n_omega());
    for (int w = 0; w < cm.n_omega(); ++w)
        for (int a = 0; a < cm.n_sources(); ++a)
            f(a, w) = cm.slice(w).row(a).squaredNorm();
    return f;
}

namespace {
std::atomic<int> g_conj_threshold{16};
}

void set_conjugation_threshold(int dim) { g_conj_threshold.store(dim); }
int conjugation_threshold() { return g_conj_threshold.load(); }

RMatrix fidelity_filter_function_direct(const PulseSequence& p,
                                        const RVector& omega) {
    const int d = p.dim();
    const auto frames = build_frames(p, /*with_c_mat=*/false);
    RMatrix f(p.n_noise(), omega.size());
    parallel_for(static_cast<std::size_t>(omega.size()), [&](std::size_t wi) {
        const double w = omega(static_cast<int>(wi));
        CMatrix integral(d, d);
        for (int a = 0; a < p.n_noise(); ++a) {
            CMatrix acc = CMatrix::Zero(d, d);
            for (std::size_t g = 0; g < frames.size(); ++g) {
                const auto& fr = frames[g];
                const double s = p.noise_sens()(a, static_cast<int>(g));
                if (s == 0.0) continue;
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j)
                        integral(i, j) = freq_integral(w + fr.omega_diff(i, j), w,
                                                       fr.omega_diff(i, j), fr.dt);
                const Complex phase = std::exp(Complex(0.0, w * fr.t_start));
                acc += (s * phase) *
                       (fr.w.adjoint() * fr.b_bar[a].cwiseProduct(integral) * fr.w);
            }
            f(a, static_cast<int>(wi)) = acc.squaredNorm();
        }
    });
    return f;
}

RMatrix fidelity_filter_function(const PulseSequence& p, const RVector& omega) {
    if (p.dim() > conjugation_threshold())
        return fidelity_filter_function_direct(p, omega);
    return fidelity_filter_function(*p.control_matrix(omega));
}

GeneralizedFF::GeneralizedFF(RVector omega, std::vector<CMatrix> slices,
                             int n_sources, int n_basis)
    : omega_(std::move(omega)),
      slices_(std::move(slices)),
      n_sources_(n_sources),
      n_basis_(n_basis) {}

GeneralizedFF generalized_filter_function(const ControlMatrix& cm) {
    const std::size_t flat = static_cast<std::size_t>(cm.n_sources()) * cm.n_basis();
    const std::size_t bytes =
        static_cast<std::size_t>(cm.n_omega()) * flat * flat * sizeof(Complex);
    if (bytes > (std::size_t(2) << 30))
        throw NumericalError(
            "generalized filter function would exceed 2 GiB; contract on the fly "
            "via decay_amplitudes instead");
    std::vector<CMatrix> slices(cm.n_omega());
    for (int w = 0; w < cm.n_omega(); ++w) {
        CVector v(flat);
        for (int a = 0; a < cm.n_sources(); ++a)
            for (int k = 0; k < cm.n_basis(); ++k)
                v(a * cm.n_basis() + k) = cm.at(a, k, w);
        slices[w] = v.conjugate() * v.transpose();
    }
    return GeneralizedFF(cm.omega(), std::move(slices), cm.n_sources(),
                         cm.n_basis());
}

PulseCorrelationFF::PulseCorrelationFF(RVector omega, std::vector<CMatrix> slices,
                                       int n_pulses, int n_sources, int n_basis)
    : omega_(std::move(omega)),
      slices_(std::move(slices)),
      n_pulses_(n_pulses),
      n_sources_(n_sources),
      n_basis_(n_basis),
      n_omega_(static_cast<int>(omega_.size())) {}

PulseCorrelationFF pulse_correlation_filter_functions(
    const std::vector<const PulseSequence*>& pulses, const RVector& omega) {
    check_compatible(pulses);
    const PulseSequence& first = *pulses[0];
    const int n = first.dim() * first.dim();
    const int n_src = first.n_noise();
    const int n_pulses = static_cast<int>(pulses.size());
    const int n_w = static_cast<int>(omega.size());
    const std::size_t flat = static_cast<std::size_t>(n_src) * n;

    // A_g(w) = B^(g)(w) Q^(g-1), flattened over (source, basis index)
    std::vector<CMatrix> a_flat(static_cast<std::size_t>(n_pulses) * n_w);
    std::vector<double> t_start(n_pulses);
    RMatrix q_cum = RMatrix::Identity(n, n);
    double t_cum = 0.0;
    for (int g = 0; g < n_pulses; ++g) {
        t_start[g] = t_cum;
        const auto cm = pulses[g]->control_matrix(omega);
        const CMatrix qc = q_cum.cast<Complex>();
        for (int w = 0; w < n_w; ++w) {
            const CMatrix prod = cm->slice(w) * qc;
            CVector v(flat);
            for (int a = 0; a < n_src; ++a)
                for (int k = 0; k < n; ++k) v(a * n + k) = prod(a, k);
            a_flat[static_cast<std::size_t>(g) * n_w + w] = v;
        }
        q_cum = pulses[g]->total_liouville() * q_cum;
        t_cum += pulses[g]->duration();
    }

    std::vector<CMatrix> slices(static_cast<std::size_t>(n_pulses) * n_pulses *
                                n_w);
    for (int g = 0; g < n_pulses; ++g)
        for (int gp = 0; gp < n_pulses; ++gp)
            for (int w = 0; w < n_w; ++w) {
                const Complex phase =
                    std::exp(Complex(0.0, omega(w) * (t_start[g] - t_start[gp])));
                const CVector& ag = a_flat[static_cast<std::size_t>(g) * n_w + w];
                const CVector& agp = a_flat[static_cast<std::size_t>(gp) * n_w + w];
                slices[(static_cast<std::size_t>(g) * n_pulses + gp) * n_w + w] =
                    phase * (agp.conjugate() * ag.transpose());
            }
    return PulseCorrelationFF(omega, std::move(slices), n_pulses, n_src, n);
}

}  // namespace qff
