#include <doctest.h>

#include <numbers>

#include "qff/error_channel.hpp"
#include "qff/metrics.hpp"
#include "test_helpers.hpp"

using namespace qff;

namespace {

PulseSequence fid_pulse(double tau = 1.0) {
    RVector dt(1);
    dt << tau;
    return PulseSequence({}, RMatrix(0, 1), {test::sigma(3) / 2.0},
                         RMatrix::Ones(1, 1), dt, test::pauli_basis_ptr(), {"z"});
}

// random physically-structured single-qubit Gamma/Delta (zero borders)
CMatrix random_bordered(std::mt19937_64& engine, bool hermitian) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix m = CMatrix::Zero(4, 4);
    for (int i = 1; i < 4; ++i)
        for (int j = 1; j < 4; ++j) m(i, j) = Complex(gauss(engine), gauss(engine));
    if (hermitian) m = 0.5 * (m + m.adjoint()).eval();
    return m;
}

}  // namespace

TEST_CASE("decay amplitudes of free induction under white noise") {
    const double s0 = 0.3;
    const PulseSequence p = fid_pulse();
    const RVector omega = two_sided_grid(log_grid(1e-4, 3e3, 3000));
    const Spectrum s = Spectrum::white(s0, omega, "z");
    const auto gamma = decay_amplitudes(*p.control_matrix(omega), s);
    // Gamma_{zz,33} -> S0 tau / 2 (band-limited to ~0.1% here)
    CHECK(gamma.pair(0, 0)(3, 3).real() ==
          doctest::Approx(s0 / 2.0).epsilon(2e-3));
    CHECK(std::abs(gamma.pair(0, 0)(3, 3).imag()) < 1e-12);
    // zero spectrum gives zero amplitudes
    const Spectrum zero = Spectrum::white(0.0, omega, "z");
    CHECK(decay_amplitudes(*p.control_matrix(omega), zero).total().norm() == 0.0);
}

TEST_CASE("decay amplitudes are hermitian under (a,k)<->(b,l)") {
    auto engine = test::rng(91);
    const PulseSequence p = test::random_qubit_pulse(engine, 3, false, 2);
    const RVector omega = two_sided_grid(log_grid(0.01, 50.0, 60));
    // cross spectrum with an imaginary part
    std::map<std::pair<int, int>, CVector> entries;
    entries[{0, 0}] = CVector::Constant(omega.size(), Complex(0.4, 0.0));
    entries[{1, 1}] = CVector::Constant(omega.size(), Complex(0.7, 0.0));
    entries[{0, 1}] = CVector::Constant(omega.size(), Complex(0.1, 0.05));
    const Spectrum s = Spectrum::tabulated(omega, {"x", "y"}, entries);
    const auto gamma = decay_amplitudes(*p.control_matrix(omega), s);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            CHECK((gamma.pair(a, b) - gamma.pair(b, a).adjoint())
                      .cwiseAbs()
                      .maxCoeff() <= 1e-12);
}

TEST_CASE("decay amplitudes reject missing labels") {
    const PulseSequence p = fid_pulse();
    const RVector omega = two_sided_grid(log_grid(0.1, 10.0, 10));
    const Spectrum s = Spectrum::white(1.0, omega, "not-z");
    CHECK_THROWS_AS(decay_amplitudes(*p.control_matrix(omega), s),
                    ValidationError);
}

TEST_CASE("nested integral branches against quadrature") {
    const double dt = 0.8;
    // generic branch
    {
        const Complex closed = detail::magnus_nested_integral(0.7, 0.3, 0.9, dt);
        const Complex oracle = test::nested_integral_oracle(0.7, 0.3, 0.9, dt);
        CHECK(std::abs(closed - oracle) <= 1e-8);
    }
    // singly resonant: w + Omega_mn = 0, Omega_ij - w != 0
    {
        const Complex closed = detail::magnus_nested_integral(0.5, 1.3, -0.5, dt);
        const Complex oracle = test::nested_integral_oracle(0.5, 1.3, -0.5, dt);
        CHECK(std::abs(closed - oracle) <= 1e-8);
    }
    // doubly resonant: exact dt^2/2
    {
        const Complex closed = detail::magnus_nested_integral(0.5, 0.5, -0.5, dt);
        CHECK(std::abs(closed - Complex(0.5 * dt * dt, 0.0)) <= 1e-15);
        const Complex oracle = test::nested_integral_oracle(0.5, 0.5, -0.5, dt);
        CHECK(std::abs(closed - oracle) <= 1e-8);
    }
    // w = Omega = 0 (DC on a trivial segment) is also doubly resonant
    CHECK(std::abs(detail::magnus_nested_integral(0.0, 0.0, 0.0, dt) -
                   Complex(0.5 * dt * dt, 0.0)) <= 1e-15);
}

TEST_CASE("nested integral fuzz against quadrature") {
    auto engine = test::rng(92);
    std::uniform_real_distribution<double> uni(-3.0, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double w = uni(engine), oij = uni(engine), omn = uni(engine);
        const double dt = 0.3 + std::abs(uni(engine)) / 3.0;
        const Complex closed = detail::magnus_nested_integral(w, oij, omn, dt);
        const Complex oracle = test::nested_integral_oracle(w, oij, omn, dt);
        CHECK(std::abs(closed - oracle) <= 1e-7);
    }
    // near-resonant shells exercise the series branches
    for (double eps : {1e-9, 1e-6, 1e-4}) {
        const double dt = 1.0;
        const Complex closed = detail::magnus_nested_integral(0.5, 1.1, -0.5 + eps, dt);
        const Complex oracle = test::nested_integral_oracle(0.5, 1.1, -0.5 + eps, dt);
        CHECK(std::abs(closed - oracle) <= 1e-7);
    }
}

TEST_CASE("frequency shifts vanish for zero spectra") {
    auto engine = test::rng(93);
    const PulseSequence p = test::random_qubit_pulse(engine, 2);
    const RVector omega = two_sided_grid(log_grid(0.1, 10.0, 20));
    const Spectrum zero = Spectrum::white(0.0, omega, "x");
    CHECK(frequency_shifts(p, zero, omega).total().norm() == 0.0);
}

TEST_CASE("time ordering: Delta + Delta^T equals Gamma") {
    // splitting the square [0,tau]^2 into the two time orderings halves a
    // symmetric-kernel integral, so on a symmetric grid with an even
    // spectrum the shifts and decay amplitudes are related exactly
    auto engine = test::rng(90);
    for (int trial = 0; trial < 4; ++trial) {
        const PulseSequence p = test::random_qubit_pulse(engine, 3);
        const RVector omega = two_sided_grid(log_grid(0.05, 30.0, 50));
        const Spectrum s =
            trial % 2 ? Spectrum::power_law(0.1, 1.0, omega, "x")
                      : Spectrum::white(0.2, omega, "x");
        const CMatrix gamma =
            decay_amplitudes(*p.control_matrix(omega), s).total();
        const CMatrix delta = frequency_shifts(p, s, omega).total();
        const double scale = std::max(1.0, gamma.cwiseAbs().maxCoeff());
        CHECK((delta + delta.transpose() - gamma).cwiseAbs().maxCoeff() <=
              1e-10 * scale);
    }
}

TEST_CASE("cumulant diagonal is independent of the shifts") {
    auto engine = test::rng(94);
    const PulseSequence p = test::random_qubit_pulse(engine, 3);
    const RVector omega = two_sided_grid(log_grid(0.05, 20.0, 40));
    const Spectrum s = Spectrum::white(0.02, omega, "x");
    const auto gamma = decay_amplitudes(*p.control_matrix(omega), s);
    const auto delta = frequency_shifts(p, s, omega);
    const CMatrix g_total = gamma.total();
    const CMatrix d_total = delta.total();
    const Basis& basis = p.basis();
    const CMatrix with = cumulant_function(g_total, &d_total, basis);
    const CMatrix without = cumulant_function(g_total, nullptr, basis);
    CHECK((with.diagonal() - without.diagonal()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("pauli shortcut equals the general assembly") {
    auto engine = test::rng(95);
    const Basis basis = Basis::pauli(1);
    for (int trial = 0; trial < 30; ++trial) {
        const CMatrix gamma = random_bordered(engine, trial % 2 == 0);
        const CMatrix delta = random_bordered(engine, false);
        const CMatrix general = cumulant_function(gamma, &delta, basis);
        const CMatrix shortcut = cumulant_function_pauli(gamma, &delta);
        CHECK((general - shortcut).cwiseAbs().maxCoeff() <= 1e-12);
        const CMatrix general_g = cumulant_function(gamma, nullptr, basis);
        const CMatrix shortcut_g = cumulant_function_pauli(gamma);
        CHECK((general_g - shortcut_g).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("pure dephasing cumulant and channel") {
    CMatrix gamma = CMatrix::Zero(4, 4);
    const double g = 0.37;
    gamma(3, 3) = g;
    const CMatrix k = cumulant_function_pauli(gamma);
    CHECK(std::abs(k(1, 1) - Complex(-g, 0)) < 1e-15);
    CHECK(std::abs(k(2, 2) - Complex(-g, 0)) < 1e-15);
    CHECK(std::abs(k(3, 3)) < 1e-15);
    CHECK(std::abs(k(0, 0)) < 1e-15);
    const CMatrix u = error_transfer_matrix(k, TransferMode::Exact);
    CHECK(std::abs(u(1, 1) - std::exp(-g)) < 1e-14);
    CHECK(std::abs(u(2, 2) - std::exp(-g)) < 1e-14);
    CHECK(u(0, 0) == Complex(1.0, 0.0));
    CHECK(u(3, 3) == Complex(1.0, 0.0));
}

TEST_CASE("zero cumulant gives the identity channel") {
    const CMatrix k = CMatrix::Zero(4, 4);
    CHECK((error_transfer_matrix(k, TransferMode::Exact) -
           CMatrix::Identity(4, 4))
              .norm() == 0.0);
    CHECK((error_transfer_matrix(k, TransferMode::FirstOrder) -
           CMatrix::Identity(4, 4))
              .norm() == 0.0);
}

TEST_CASE("transfer modes differ by the exponential remainder") {
    auto engine = test::rng(96);
    for (int trial = 0; trial < 20; ++trial) {
        CMatrix k = random_bordered(engine, false) * 0.05;
        const CMatrix exact = error_transfer_matrix(k, TransferMode::Exact);
        const CMatrix first = error_transfer_matrix(k, TransferMode::FirstOrder);
        const double kn = k.norm();
        CHECK((exact - first).norm() <= 0.5 * kn * kn * std::exp(kn) + 1e-15);
    }
}

TEST_CASE("borders of the transfer matrix are exact") {
    auto engine = test::rng(97);
    const PulseSequence p = test::random_qubit_pulse(engine, 3);
    const RVector omega = two_sided_grid(log_grid(0.05, 50.0, 50));
    const Spectrum s = Spectrum::white(0.01, omega, "x");
    for (auto mode : {TransferMode::Exact, TransferMode::FirstOrder}) {
        ErrorChannelOptions opts;
        opts.mode = mode;
        const ErrorChannel ch = compute_error_channel(p, s, omega, opts);
        for (int j = 0; j < 4; ++j) {
            CHECK(ch.transfer(0, j) == Complex(j == 0 ? 1.0 : 0.0, 0.0));
            CHECK(ch.transfer(j, 0) == Complex(j == 0 ? 1.0 : 0.0, 0.0));
        }
        CHECK(ch.cumulant.imag().cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("weak incoherent channels are contractive") {
    auto engine = test::rng(98);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        // physical Gamma: positive semidefinite in the (k,l) block
        CMatrix a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = Complex(gauss(engine), gauss(engine));
        CMatrix gamma = CMatrix::Zero(4, 4);
        gamma.bottomRightCorner(3, 3) = a * a.adjoint();
        gamma *= 0.01 / std::abs(gamma.trace());
        const CMatrix k = cumulant_function_pauli(gamma);
        REQUIRE(k.norm() <= 0.1);
        const CMatrix u = error_transfer_matrix(k, TransferMode::Exact);
        Eigen::JacobiSVD<CMatrix> svd(u);
        CHECK(svd.singularValues().maxCoeff() <= 1.0 + 1e-10);
    }
}

TEST_CASE("general cumulant on a ggm basis matches the pauli path") {
    // same physical channel expressed in two bases related by identity
    auto engine = test::rng(99);
    const PulseSequence p = test::random_qubit_pulse(engine, 2);
    const RVector omega = two_sided_grid(log_grid(0.05, 20.0, 30));
    const Spectrum s = Spectrum::white(0.05, omega, "x");
    const ErrorChannel via_pauli = compute_error_channel(p, s, omega);
    // ggm(2) equals pauli(1) element by element, so the transfer matrices
    // must agree through the general (trace tensor) path
    auto ggm = std::make_shared<const Basis>(Basis::ggm(2));
    PulseSequence p_ggm(p.control_ops(), p.control_coeffs(), p.noise_ops(),
                        p.noise_sens(), p.dt(), ggm, p.noise_ids());
    const ErrorChannel via_ggm = compute_error_channel(p_ggm, s, omega);
    CHECK((via_pauli.transfer - via_ggm.transfer).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("frequency shifts on a driven pulse change the channel") {
    // sanity: with shifts requested, delta is populated and enters off-diagonally
    auto engine = test::rng(100);
    const PulseSequence p = test::random_qubit_pulse(engine, 3);
    const RVector omega = two_sided_grid(log_grid(0.05, 20.0, 40));
    const Spectrum s = Spectrum::white(0.05, omega, "x");
    ErrorChannelOptions opts;
    opts.with_frequency_shifts = true;
    const ErrorChannel ch = compute_error_channel(p, s, omega, opts);
    REQUIRE(ch.delta.has_value());
    CHECK(ch.delta->total().norm() > 0.0);
    const ErrorChannel plain = compute_error_channel(p, s, omega);
    CHECK((ch.transfer - plain.transfer).norm() > 1e-12);
    // the shifts are antisymmetric: the cumulant diagonal is untouched
    CHECK((ch.cumulant.diagonal() - plain.cumulant.diagonal())
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
}
