// Internal helpers shared by the control-matrix and frequency-shift
// computations. Not installed.
#pragma once

#include <cmath>
#include <vector>

#include "qff/pulse.hpp"
#include "qff/types.hpp"

namespace qff::internal {

// -i (e^{i x dt} - 1) / x with the analytic limit dt at the resonance
// x = omega + Omega_ij = 0.
inline Complex freq_integral(double x, double omega, double omega_diff,
                             double dt) {
    const double scale =
        std::max({std::abs(omega), std::abs(omega_diff), 1.0 / dt});
    if (std::abs(x) < 1e-8 * scale) return Complex(dt, 0.0);
    return Complex(0.0, -1.0) * num::expim1(x * dt) / x;
}

struct SegmentFrame {
    double t_start = 0.0;
    double dt = 0.0;
    RVector eigvals;
    RMatrix omega_diff;          // Omega_ij = w_i - w_j
    std::vector<CMatrix> b_bar;  // V^dag B_a V per source
    CMatrix c_mat;               // (d^2 x d^2), c_mat(i + d*j, k) = Cbar_{k,ji}
    CMatrix w;                   // V^dag Q_{g-1}
};

inline std::vector<SegmentFrame> build_frames(const PulseSequence& p,
                                              bool with_c_mat) {
    const auto& systems = p.eigensystems();
    const auto& props = p.propagators();
    const Basis& basis = p.basis();
    const int d = p.dim();
    const int n = d * d;
    std::vector<SegmentFrame> frames(p.n_segments());
    for (int g = 0; g < p.n_segments(); ++g) {
        auto& f = frames[g];
        f.t_start = props.t(g);
        f.dt = p.dt()(g);
        f.eigvals = systems[g].values;
        f.omega_diff.resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                f.omega_diff(i, j) = f.eigvals(i) - f.eigvals(j);
        const CMatrix vd = systems[g].vectors.adjoint();
        f.w = vd * props.cumulative[g];
        f.b_bar.reserve(p.n_noise());
        for (int a = 0; a < p.n_noise(); ++a)
            f.b_bar.push_back(vd * p.noise_ops()[a] * systems[g].vectors);
        if (with_c_mat) {
            f.c_mat.resize(n, n);
            const CMatrix wd = f.w.adjoint();
            for (int k = 0; k < n; ++k) {
                const CMatrix cb = f.w * basis.element(k) * wd;
                for (int j = 0; j < d; ++j)
                    for (int i = 0; i < d; ++i) f.c_mat(i + d * j, k) = cb(j, i);
            }
        }
    }
    return frames;
}

// Per-segment frequency-domain control matrix term G^(g)_{ak}(w),
// including the phase e^{i w t_{g-1}} and the sensitivity s_a^(g).
inline CMatrix segment_control_term(const SegmentFrame& f, const RMatrix& sens,
                                    int g, double w, int n_src, int d) {
    const int n = d * d;
    CMatrix integral(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            integral(i, j) =
                freq_integral(w + f.omega_diff(i, j), w, f.omega_diff(i, j), f.dt);
    const Complex phase = std::exp(Complex(0.0, w * f.t_start));
    CMatrix term = CMatrix::Zero(n_src, n);
    for (int a = 0; a < n_src; ++a) {
        const double s = sens(a, g);
        if (s == 0.0) continue;
        const CMatrix had = f.b_bar[a].cwiseProduct(integral);
        term.row(a) =
            (s * phase) *
            (Eigen::Map<const CVector>(had.data(), n).transpose() * f.c_mat);
    }
    return term;
}

}  // namespace qff::internal
