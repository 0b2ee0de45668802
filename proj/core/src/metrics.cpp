#include "qff/metrics.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace qff {

namespace {

void check_transfer_shape(const CMatrix& transfer, int dim) {
    if (transfer.rows() != dim * dim || transfer.cols() != dim * dim)
        throw ValidationError("transfer matrix must be d^2 x d^2");
}

double real_checked(Complex z, const char* what) {
    if (std::abs(z.imag()) > 1e-9 * (1.0 + std::abs(z.real())))
        throw NumericalError(std::string(what) +
                             ": unexpected imaginary part " +
                             std::to_string(z.imag()));
    return z.real();
}

}  // namespace

double avg_gate_fidelity(const CMatrix& transfer, int dim) {
    check_transfer_shape(transfer, dim);
    const double tr = real_checked(transfer.trace(), "avg_gate_fidelity");
    return (tr + dim) / (dim * (dim + 1.0));
}

double ent_fidelity(const CMatrix& transfer, int dim) {
    check_transfer_shape(transfer, dim);
    return real_checked(transfer.trace(), "ent_fidelity") / (dim * dim);
}

double avg_gate_fidelity_subspace(const CMatrix& transfer, int sub_dim,
                                  const std::vector<int>& indices) {
    if (sub_dim < 1) throw ValidationError("subspace dimension must be >= 1");
    Complex tr(0, 0);
    for (int i : indices) {
        if (i < 0 || i >= transfer.rows())
            throw ValidationError("subspace index out of range");
        tr += transfer(i, i);
    }
    const double ent =
        real_checked(tr, "avg_gate_fidelity_subspace") / (sub_dim * sub_dim);
    return (sub_dim * ent + 1.0) / (sub_dim + 1.0);
}

std::map<std::pair<std::string, std::string>, double> infidelity(
    const ControlMatrix& cm, const Spectrum& s, int dim,
    InfidelityMethod method) {
    std::map<std::pair<std::string, std::string>, double> out;
    if (method == InfidelityMethod::GammaTrace) {
        const DecayAmplitudes gamma = decay_amplitudes(cm, s);
        for (int a = 0; a < cm.n_sources(); ++a)
            for (int b = 0; b < cm.n_sources(); ++b) {
                const Complex tr = gamma.pair(a, b).trace();
                if (a == b || std::abs(tr) > 0)
                    out[{cm.source_ids()[a], cm.source_ids()[b]}] =
                        tr.real() / dim;
            }
        return out;
    }
    // FFIntegral: diagonal pairs through the fidelity filter function
    const RMatrix f = fidelity_filter_function(cm);
    const RVector weights =
        trapezoid_weights(cm.omega()) / (2.0 * std::numbers::pi);
    for (int a = 0; a < cm.n_sources(); ++a) {
        const int sa = s.index_of(cm.source_ids()[a]);
        if (sa < 0)
            throw ValidationError("spectrum is missing noise source '" +
                                  cm.source_ids()[a] + "'");
        const CVector sw = s.values_on(sa, sa, cm.omega());
        double acc = 0.0;
        for (int w = 0; w < cm.n_omega(); ++w)
            acc += weights(w) * sw(w).real() * f(a, w);
        out[{cm.source_ids()[a], cm.source_ids()[a]}] = acc / dim;
    }
    return out;
}

namespace {

void check_state(const CMatrix& rho, const char* name) {
    if (!num::is_hermitian(rho, 1e-10))
        throw ValidationError(std::string(name) + " is not Hermitian");
    if (std::abs(rho.trace() - Complex(1.0, 0.0)) > 1e-10)
        throw ValidationError(std::string(name) + " is not normalized");
}

}  // namespace

double state_fidelity(const CMatrix& transfer, const CMatrix& rho,
                      const CMatrix& sigma, const Basis& basis) {
    check_state(rho, "rho");
    check_state(sigma, "sigma");
    if ((rho * rho - rho).norm() > 1e-10)
        throw ValidationError("rho must be a pure state");
    const CVector r = basis.expand(rho);
    const CVector sg = basis.expand(sigma);
    return real_checked(r.dot(transfer * sg), "state_fidelity");
}

double povm_probability(const CMatrix& povm_element, const CMatrix& transfer,
                        const CMatrix& sigma, const Basis& basis) {
    if (!num::is_hermitian(povm_element, 1e-10))
        throw ValidationError("POVM element is not Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(povm_element);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw ValidationError("POVM element is not positive semidefinite");
    check_state(sigma, "sigma");
    const CVector e = basis.expand(povm_element);
    const CVector sg = basis.expand(sigma);
    return real_checked(e.dot(transfer * sg), "povm_probability");
}

LeakageRates leakage_rates(const CMatrix& transfer, const CMatrix& comp_projector,
                           const Basis& basis) {
    const int d = basis.dim();
    if (comp_projector.rows() != d || comp_projector.cols() != d)
        throw ValidationError("projector dimension mismatch");
    if (!num::is_hermitian(comp_projector, 1e-10) ||
        (comp_projector * comp_projector - comp_projector).norm() > 1e-10)
        throw ValidationError("comp_projector is not a projector");
    const double d_c = std::round(comp_projector.trace().real());
    const double d_l = d - d_c;
    if (d_c < 1 || d_l < 1)
        throw ValidationError("projector must split the space into two "
                              "nontrivial subspaces");
    const CMatrix leak_projector = CMatrix::Identity(d, d) - comp_projector;
    const CVector pc = basis.expand(comp_projector);
    const CVector pl = basis.expand(leak_projector);
    LeakageRates rates{};
    rates.leakage = real_checked(pl.dot(transfer * pc), "leakage") / d_c;
    rates.seepage = real_checked(pc.dot(transfer * pl), "seepage") / d_l;
    return rates;
}

double xi_squared(const PulseSequence& p, const Spectrum& s) {
    if (!s.diagonal_only())
        throw ValidationError("xi_squared requires diagonal (auto-correlated) "
                              "spectra");
    double xi_sq = 0.0;
    for (int a = 0; a < p.n_noise(); ++a) {
        const int sa = s.index_of(p.noise_ids()[a]);
        if (sa < 0)
            throw ValidationError("spectrum is missing noise source '" +
                                  p.noise_ids()[a] + "'");
        const double power = s.band_power(sa);
        if (!std::isfinite(power))
            return std::numeric_limits<double>::infinity();
        double weighted_time = 0.0;
        for (int g = 0; g < p.n_segments(); ++g)
            weighted_time += std::abs(p.noise_sens()(a, g)) * p.dt()(g);
        xi_sq += p.noise_ops()[a].squaredNorm() * power * weighted_time *
                 weighted_time;
    }
    return xi_sq;
}

bool magnus_convergent(double xi_sq, double c_m) {
    const double bound = std::numbers::pi / c_m;
    return xi_sq < bound * bound;
}

ChannelMetrics channel_metrics(const PulseSequence& p, const Spectrum& s,
                               const RVector& omega, TransferMode mode) {
    ErrorChannelOptions opts;
    opts.mode = mode;
    const ErrorChannel ch = compute_error_channel(p, s, omega, opts);
    ChannelMetrics m;
    m.avg_fidelity = avg_gate_fidelity(ch.transfer, p.dim());
    m.ent_fidelity = ent_fidelity(ch.transfer, p.dim());
    m.infid_per_source =
        infidelity(*p.control_matrix(omega), s, p.dim(),
                   InfidelityMethod::GammaTrace);
    m.xi_sq = s.diagonal_only() ? xi_squared(p, s)
                                : std::numeric_limits<double>::quiet_NaN();
    return m;
}

}  // namespace qff
