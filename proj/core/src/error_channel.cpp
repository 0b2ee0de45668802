#include "qff/error_channel.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "qff/parallel.hpp"
#include "segment_frames.hpp"

namespace qff {

SourcePairMatrices::SourcePairMatrices(int n_sources, int n_basis)
    : n_src_(n_sources), n_basis_(n_basis) {
    data_.assign(static_cast<std::size_t>(n_src_) * n_src_,
                 CMatrix::Zero(n_basis_, n_basis_));
}

CMatrix SourcePairMatrices::total() const {
    CMatrix t = CMatrix::Zero(n_basis_, n_basis_);
    for (const auto& m : data_) t += m;
    return t;
}

namespace {

std::vector<int> match_sources(const std::vector<std::string>& ids,
                               const Spectrum& s) {
    std::vector<int> map;
    map.reserve(ids.size());
    for (const auto& id : ids) {
        const int idx = s.index_of(id);
        if (idx < 0)
            throw ValidationError("spectrum is missing noise source '" + id + "'");
        map.push_back(idx);
    }
    return map;
}

}  // namespace

DecayAmplitudes decay_amplitudes(const ControlMatrix& cm, const Spectrum& s) {
    const int n_src = cm.n_sources();
    const int n = cm.n_basis();
    const auto src = match_sources(cm.source_ids(), s);
    const RVector& omega = cm.omega();
    const RVector weights = trapezoid_weights(omega) / (2.0 * std::numbers::pi);

    DecayAmplitudes gamma(n_src, n);
    for (int a = 0; a < n_src; ++a)
        for (int b = 0; b < n_src; ++b) {
            const CVector sab = s.values_on(src[a], src[b], omega);
            if (sab.isZero(0.0)) continue;
            CMatrix acc = CMatrix::Zero(n, n);
            for (int w = 0; w < cm.n_omega(); ++w) {
                const Complex c = weights(w) * sab(w);
                if (c == Complex(0.0, 0.0)) continue;
                acc.noalias() += c * (cm.slice(w).row(a).conjugate().transpose() *
                                      cm.slice(w).row(b));
            }
            gamma.pair(a, b) = std::move(acc);
        }
    return gamma;
}

namespace detail {

// Three-branch closed form with series-stabilized near-resonant
// evaluation. x = w + Omega_mn, y = Omega_ij - w, theta = y*dt.
Complex magnus_nested_integral(double w, double om_ij, double om_mn, double dt) {
    const double x = w + om_mn;
    const double y = om_ij - w;
    const double scale_x = std::max({std::abs(w), std::abs(om_mn), 1.0 / dt});
    const double scale_y = std::max({std::abs(w), std::abs(om_ij), 1.0 / dt});
    const bool x_res = std::abs(x) < 1e-8 * scale_x;
    const bool y_res = std::abs(y) < 1e-8 * scale_y;

    if (x_res && y_res) return Complex(0.5 * dt * dt, 0.0);

    if (x_res) {
        // (1/y) (E(y) - i dt e^{i y dt})
        const double theta = y * dt;
        if (std::abs(theta) < 1e-3) {
            const Complex it(0.0, theta);
            return dt * dt *
                   (0.5 + it / 3.0 + it * it / 8.0 + it * it * it / 30.0);
        }
        const Complex e = num::cexp_ratio(y, dt);
        const Complex rot = Complex(0.0, dt) * std::exp(Complex(0.0, theta));
        return (e - rot) / y;
    }

    // generic branch: (E(y) - E(y + x)) / x
    if (std::abs(x * dt) < 1e-4) {
        // midpoint derivative, -E'(u) at u = y + x/2
        const double theta = (y + 0.5 * x) * dt;
        Complex fp;  // f'(theta) with f(theta) = (e^{i theta} - 1)/theta
        if (std::abs(theta) < 1e-2) {
            const Complex it(0.0, theta);
            fp = Complex(0.0, 0.5) + it * Complex(0.0, 1.0 / 3.0) +
                 it * it * Complex(0.0, 0.125) + it * it * it * Complex(0.0, 1.0 / 30.0);
        } else {
            const Complex eit = std::exp(Complex(0.0, theta));
            fp = (Complex(0.0, theta) * eit - num::expim1(theta)) / (theta * theta);
        }
        return -dt * dt * fp;
    }
    return (num::cexp_ratio(y, dt) - num::cexp_ratio(y + x, dt)) / x;
}

}  // namespace detail

FrequencyShifts frequency_shifts(const PulseSequence& p, const Spectrum& s,
                                 const RVector& omega) {
    const int d = p.dim();
    const int n = d * d;
    const int n_src = p.n_noise();
    const int n_seg = p.n_segments();
    const auto src = match_sources(p.noise_ids(), s);
    const RVector weights = trapezoid_weights(omega) / (2.0 * std::numbers::pi);
    const auto frames = internal::build_frames(p, /*with_c_mat=*/true);

    // spectra sampled once per pair
    std::vector<CVector> sab(static_cast<std::size_t>(n_src) * n_src);
    for (int a = 0; a < n_src; ++a)
        for (int b = 0; b < n_src; ++b)
            sab[a * n_src + b] = s.values_on(src[a], src[b], omega);

    // U_a^(g) = diag(vec(Bbar_a)) * c_mat, independent of frequency
    std::vector<std::vector<CMatrix>> u(n_seg, std::vector<CMatrix>(n_src));
    for (int g = 0; g < n_seg; ++g)
        for (int a = 0; a < n_src; ++a) {
            const CVector bvec =
                Eigen::Map<const CVector>(frames[g].b_bar[a].data(), n);
            u[g][a] = bvec.asDiagonal() * frames[g].c_mat;
        }

    // per-frequency accumulation, reduced in fixed order afterwards
    const int n_w = static_cast<int>(omega.size());
    std::vector<std::vector<CMatrix>> per_w(n_w);
    parallel_for(static_cast<std::size_t>(n_w), [&](std::size_t wi) {
        const double w = omega(static_cast<int>(wi));
        // per-segment control-matrix terms and their prefix sums
        std::vector<CMatrix> g_terms(n_seg);
        for (int g = 0; g < n_seg; ++g)
            g_terms[g] = internal::segment_control_term(frames[g], p.noise_sens(),
                                                        g, w, n_src, d);
        std::vector<CMatrix> contrib(static_cast<std::size_t>(n_src) * n_src,
                                     CMatrix::Zero(n, n));
        CMatrix prefix = CMatrix::Zero(n_src, n);
        CMatrix j_mat(n, n);
        for (int g = 0; g < n_seg; ++g) {
            const auto& f = frames[g];
            // cross-segment term
            for (int a = 0; a < n_src; ++a)
                for (int b = 0; b < n_src; ++b)
                    contrib[a * n_src + b].noalias() +=
                        g_terms[g].row(a).conjugate().transpose() * prefix.row(b);
            // same-segment nested integrals
            for (int ij = 0; ij < n; ++ij)
                for (int mn = 0; mn < n; ++mn)
                    j_mat(ij, mn) = detail::magnus_nested_integral(
                        w, f.omega_diff(ij % d, ij / d),
                        f.omega_diff(mn % d, mn / d), f.dt);
            for (int a = 0; a < n_src; ++a) {
                const double s_a = p.noise_sens()(a, g);
                if (s_a == 0.0) continue;
                const CMatrix ju_t = u[g][a].transpose() * j_mat;
                for (int b = 0; b < n_src; ++b) {
                    const double s_b = p.noise_sens()(b, g);
                    if (s_b == 0.0) continue;
                    contrib[a * n_src + b].noalias() +=
                        (s_a * s_b) * (ju_t * u[g][b]);
                }
            }
            prefix += g_terms[g];
        }
        per_w[wi] = std::move(contrib);
    });

    FrequencyShifts delta(n_src, n);
    for (int w = 0; w < n_w; ++w)
        for (int a = 0; a < n_src; ++a)
            for (int b = 0; b < n_src; ++b) {
                const Complex c = weights(w) * sab[a * n_src + b](w);
                if (c != Complex(0.0, 0.0))
                    delta.pair(a, b) += c * per_w[w][a * n_src + b];
            }
    return delta;
}

CMatrix cumulant_function(const CMatrix& gamma, const CMatrix* delta,
                          const Basis& basis) {
    const int n = basis.size();
    if (gamma.rows() != n || gamma.cols() != n)
        throw ValidationError("cumulant: gamma shape does not match basis");
    if (delta && (delta->rows() != n || delta->cols() != n))
        throw ValidationError("cumulant: delta shape does not match basis");

    CMatrix k = CMatrix::Zero(n, n);
    const auto& tensor = basis.trace_tensor();
    for (const auto& e : tensor.entries()) {
        const Complex half = 0.5 * e.value;
        const int p = e.i, q = e.j, r = e.k, s = e.l;
        // g_{ijkl} = T_klji - T_kjli - T_kilj + T_kijl, contracted with Gamma
        k(s, r) -= half * gamma(p, q);
        k(s, q) += half * gamma(p, r);
        k(q, s) += half * gamma(p, r);
        k(q, r) -= half * gamma(p, s);
        if (delta) {
            // f_{ijkl} = T_klji - T_lkji - T_klij + T_lkij, with Delta
            k(s, r) -= half * (*delta)(p, q);
            k(s, r) += half * (*delta)(q, p);
            k(r, s) += half * (*delta)(p, q);
            k(r, s) -= half * (*delta)(q, p);
        }
    }
    if (basis.identity_first()) {
        // trace preservation and unitality are structural
        k.row(0).setZero();
        k.col(0).setZero();
    }
    return k;
}

CMatrix cumulant_function_pauli(const CMatrix& gamma, const CMatrix* delta) {
    if (gamma.rows() != 4 || gamma.cols() != 4)
        throw ValidationError("pauli cumulant shortcut requires a single qubit "
                              "(4x4 matrices)");
    if (delta && (delta->rows() != 4 || delta->cols() != 4))
        throw ValidationError("pauli cumulant shortcut: delta shape mismatch");
    CMatrix k = CMatrix::Zero(4, 4);
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j) {
            if (i == j) {
                for (int m = 1; m < 4; ++m)
                    if (m != i) k(i, i) -= gamma(m, m);
            } else {
                // Gamma enters transposed; for physical (real symmetric)
                // decay amplitudes this is the same as Gamma(i, j)
                k(i, j) = gamma(j, i);
                if (delta) k(i, j) += (*delta)(j, i) - (*delta)(i, j);
            }
        }
    return k;
}

CMatrix error_transfer_matrix(const CMatrix& cumulant, TransferMode mode) {
    const int n = static_cast<int>(cumulant.rows());
    if (cumulant.cols() != n)
        throw ValidationError("error transfer matrix: cumulant must be square");
    if (mode == TransferMode::FirstOrder)
        return CMatrix::Identity(n, n) + cumulant;

    const bool zero_borders = cumulant.row(0).isZero(0.0) &&
                              cumulant.col(0).isZero(0.0);
    if (!zero_borders) return cumulant.exp();
    // exponentiate the interior block so the borders stay exactly e_0
    CMatrix out = CMatrix::Identity(n, n);
    if (n > 1) {
        const CMatrix inner = cumulant.bottomRightCorner(n - 1, n - 1);
        out.bottomRightCorner(n - 1, n - 1) = inner.exp();
    }
    return out;
}

ErrorChannel compute_error_channel(const PulseSequence& p, const Spectrum& s,
                                   const RVector& omega,
                                   const ErrorChannelOptions& opts) {
    const auto cm = p.control_matrix(omega);
    DecayAmplitudes gamma = decay_amplitudes(*cm, s);
    std::optional<FrequencyShifts> delta;
    if (opts.with_frequency_shifts) delta = frequency_shifts(p, s, omega);

    const CMatrix gamma_total = gamma.total();
    std::optional<CMatrix> delta_total;
    if (delta) delta_total = delta->total();

    CMatrix k;
    if (p.dim() == 2 && p.basis().kind() == BasisKind::Pauli)
        k = cumulant_function_pauli(gamma_total,
                                    delta_total ? &*delta_total : nullptr);
    else
        k = cumulant_function(gamma_total, delta_total ? &*delta_total : nullptr,
                              p.basis());

    CMatrix transfer = error_transfer_matrix(k, opts.mode);
    return ErrorChannel{std::move(gamma), std::move(delta), std::move(k),
                        std::move(transfer)};
}

}  // namespace qff
