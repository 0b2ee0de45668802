#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qff {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Thrown when an input violates a documented precondition (shapes,
/// Hermiticity, normalization, label mismatches, ...).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown when a numerical routine fails to converge or produces
/// results outside its guaranteed accuracy.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Thrown by the file loaders on malformed input.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace num {

/// e^{i theta} - 1 without cancellation for small theta.
inline Complex expim1(double theta) {
    const double h = 0.5 * theta;
    const double s = std::sin(h);
    return Complex(-2.0 * s * s, 2.0 * s * std::cos(h));
}

/// (e^{i x dt} - 1) / x, continued analytically to i*dt at x = 0.
/// Entire in x, so no branch threshold is needed here.
inline Complex cexp_ratio(double x, double dt) {
    const double h = 0.5 * x * dt;
    // sin(h)/h with the h -> 0 limit
    const double sinc = std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
    return Complex(0.0, dt) * sinc * std::exp(Complex(0.0, h));
}

inline bool is_hermitian(const CMatrix& a, double tol) {
    return (a - a.adjoint()).norm() <= tol;
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline bool is_unitary(const CMatrix& u, double tol) {
    return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).norm() <= tol;
}

}  // namespace num

}  // namespace qff
