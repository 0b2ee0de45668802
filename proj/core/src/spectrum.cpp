#include "qff/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace qff {

RVector log_grid(double lo, double hi, int n) {
    if (n < 1) throw ValidationError("log_grid: need at least one point");
    if (lo <= 0 || hi <= 0 || hi < lo)
        throw ValidationError("log_grid: require 0 < lo <= hi");
    RVector g(n);
    if (n == 1) {
        g(0) = lo;
        return g;
    }
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        g(i) = std::exp(llo + (lhi - llo) * i / (n - 1));
    return g;
}

RVector linear_grid(double lo, double hi, int n) {
    if (n < 1) throw ValidationError("linear_grid: need at least one point");
    if (hi < lo) throw ValidationError("linear_grid: require lo <= hi");
    RVector g(n);
    if (n == 1) {
        g(0) = lo;
        return g;
    }
    for (int i = 0; i < n; ++i) g(i) = lo + (hi - lo) * i / (n - 1);
    return g;
}

RVector two_sided_grid(const RVector& omega) {
    if (omega.size() == 0) throw ValidationError("two_sided_grid: empty grid");
    if (omega(0) < 0) return omega;  // already two-sided
    const bool has_zero = omega(0) == 0.0;
    const int n = static_cast<int>(omega.size());
    RVector g(2 * n - (has_zero ? 1 : 0));
    int w = 0;
    for (int i = n - 1; i >= (has_zero ? 1 : 0); --i) g(w++) = -omega(i);
    for (int i = 0; i < n; ++i) g(w++) = omega(i);
    return g;
}

RVector trapezoid_weights(const RVector& x) {
    const int n = static_cast<int>(x.size());
    if (n < 2)
        throw ValidationError("integration grid needs at least 2 points");
    for (int i = 1; i < n; ++i)
        if (x(i) <= x(i - 1))
            throw ValidationError("integration grid must be strictly increasing");
    RVector w = RVector::Zero(n);
    for (int i = 0; i + 1 < n; ++i) {
        const double h = 0.5 * (x(i + 1) - x(i));
        w(i) += h;
        w(i + 1) += h;
    }
    return w;
}

namespace {

void check_grid(const RVector& omega) {
    if (omega.size() == 0) throw ValidationError("spectrum: empty frequency grid");
    for (int i = 1; i < omega.size(); ++i)
        if (omega(i) <= omega(i - 1))
            throw ValidationError("spectrum: grid must be strictly increasing");
}

// piecewise-linear interpolation, log-log when usable for this bracket
double interp_point(const RVector& x, const RVector& y, double t, bool loglog) {
    const int n = static_cast<int>(x.size());
    const double span = x(n - 1) - x(0);
    const double slack = 1e-9 * std::max(span, 1.0);
    if (t < x(0) - slack || t > x(n - 1) + slack)
        throw ValidationError("spectrum grid does not cover requested frequency");
    t = std::clamp(t, x(0), x(n - 1));
    int hi = static_cast<int>(
        std::lower_bound(x.data(), x.data() + n, t) - x.data());
    if (hi == 0) hi = 1;
    if (hi == n) hi = n - 1;
    const int lo = hi - 1;
    if (loglog && t > 0 && x(lo) > 0 && y(lo) > 0 && y(hi) > 0) {
        const double f = (std::log(t) - std::log(x(lo))) /
                         (std::log(x(hi)) - std::log(x(lo)));
        return std::exp(std::log(y(lo)) + f * (std::log(y(hi)) - std::log(y(lo))));
    }
    const double f = (t - x(lo)) / (x(hi) - x(lo));
    return y(lo) + f * (y(hi) - y(lo));
}

}  // namespace

void Spectrum::validate() const {
    check_grid(omega_);
    if (ids_.empty()) throw ValidationError("spectrum: no noise sources");
    std::set<std::string> seen(ids_.begin(), ids_.end());
    if (seen.size() != ids_.size())
        throw ValidationError("spectrum: duplicate source ids");
    for (const auto& [key, v] : values_) {
        if (v.size() != omega_.size())
            throw ValidationError("spectrum: value array shape mismatch");
        if (key.first == key.second) {
            for (int i = 0; i < v.size(); ++i) {
                if (std::abs(v(i).imag()) > 1e-12 * (1.0 + std::abs(v(i))))
                    throw ValidationError("spectrum: diagonal entry not real");
                if (v(i).real() < -1e-12)
                    throw ValidationError("spectrum: negative diagonal entry");
            }
        } else {
            auto it = values_.find({key.second, key.first});
            if (it != values_.end()) {
                for (int i = 0; i < v.size(); ++i)
                    if (std::abs(v(i) - std::conj(it->second(i))) >
                        1e-12 * (1.0 + std::abs(v(i))))
                        throw ValidationError(
                            "spectrum: cross entries violate S_ab = conj(S_ba)");
            }
        }
    }
}

Spectrum Spectrum::white(double level, RVector omega, std::string id) {
    if (level < 0) throw ValidationError("white: level must be >= 0");
    check_grid(omega);
    Spectrum s;
    s.ids_ = {std::move(id)};
    s.one_sided_ = omega(0) >= 0;
    s.values_[{0, 0}] = CVector::Constant(omega.size(), Complex(level, 0.0));
    s.omega_ = std::move(omega);
    s.validate();
    return s;
}

Spectrum Spectrum::power_law(double amplitude, double exponent, RVector omega,
                             std::string id) {
    check_grid(omega);
    CVector v(omega.size());
    for (int i = 0; i < omega.size(); ++i) {
        const double w = std::abs(omega(i));
        if (w == 0.0) {
            if (exponent > 0)
                throw ValidationError("power_law: grid contains w = 0 with "
                                      "positive exponent (singular)");
            v(i) = exponent == 0.0 ? amplitude : 0.0;
        } else {
            v(i) = amplitude * std::pow(w, -exponent);
        }
        if (v(i).real() < 0)
            throw ValidationError("power_law: negative spectral density");
    }
    Spectrum s;
    s.ids_ = {std::move(id)};
    s.one_sided_ = omega(0) >= 0;
    s.values_[{0, 0}] = std::move(v);
    s.omega_ = std::move(omega);
    s.validate();
    return s;
}

Spectrum Spectrum::tabulated_diagonal(RVector omega, std::vector<RVector> values,
                                      std::vector<std::string> ids) {
    if (values.size() != ids.size())
        throw ValidationError("tabulated_diagonal: ids/values size mismatch");
    Spectrum s;
    s.ids_ = std::move(ids);
    s.one_sided_ = omega.size() > 0 && omega(0) >= 0;
    for (std::size_t a = 0; a < values.size(); ++a) {
        if (values[a].size() != omega.size())
            throw ValidationError("tabulated_diagonal: value row shape mismatch");
        s.values_[{static_cast<int>(a), static_cast<int>(a)}] =
            values[a].cast<Complex>();
    }
    s.omega_ = std::move(omega);
    s.validate();
    return s;
}

Spectrum Spectrum::tabulated(RVector omega, std::vector<std::string> ids,
                             std::map<std::pair<int, int>, CVector> entries) {
    Spectrum s;
    s.ids_ = std::move(ids);
    s.one_sided_ = omega.size() > 0 && omega(0) >= 0;
    const int n = static_cast<int>(s.ids_.size());
    for (const auto& [key, v] : entries)
        if (key.first < 0 || key.first >= n || key.second < 0 || key.second >= n)
            throw ValidationError("tabulated: source index out of range");
    // fill missing conjugate partners
    for (const auto& [key, v] : entries)
        if (key.first != key.second &&
            entries.find({key.second, key.first}) == entries.end())
            s.values_[{key.second, key.first}] = v.conjugate();
    for (auto& [key, v] : entries) s.values_[key] = std::move(v);
    s.diagonal_only_ = true;
    for (const auto& [key, v] : s.values_)
        if (key.first != key.second) s.diagonal_only_ = false;
    s.omega_ = std::move(omega);
    s.validate();
    return s;
}

Spectrum Spectrum::diagonal(const std::vector<Spectrum>& singles) {
    if (singles.empty()) throw ValidationError("diagonal: no spectra given");
    Spectrum s;
    s.omega_ = singles[0].omega_;
    s.one_sided_ = singles[0].one_sided_;
    for (std::size_t a = 0; a < singles.size(); ++a) {
        if (singles[a].n_sources() != 1 || !singles[a].diagonal_only_)
            throw ValidationError("diagonal: inputs must be single-source spectra");
        if (singles[a].omega_.size() != s.omega_.size() ||
            (singles[a].omega_ - s.omega_).cwiseAbs().maxCoeff() != 0.0)
            throw ValidationError("diagonal: spectra must share one grid");
        s.ids_.push_back(singles[a].ids_[0]);
        s.values_[{static_cast<int>(a), static_cast<int>(a)}] =
            singles[a].values_.at({0, 0});
    }
    s.validate();
    return s;
}

const CVector* Spectrum::stored(int a, int b) const {
    auto it = values_.find({a, b});
    return it == values_.end() ? nullptr : &it->second;
}

CVector Spectrum::values_on(int a, int b, const RVector& target) const {
    if (a < 0 || a >= n_sources() || b < 0 || b >= n_sources())
        throw ValidationError("spectrum: source index out of range");
    const CVector* v = stored(a, b);
    if (!v) return CVector::Zero(target.size());  // absent cross terms vanish

    // exact when grids match bitwise
    if (target.size() == omega_.size() &&
        (target - omega_).cwiseAbs().maxCoeff() == 0.0)
        return *v;

    CVector out(target.size());
    const bool diag = a == b;
    const RVector re = v->real();
    const RVector im = v->imag();
    for (int i = 0; i < target.size(); ++i) {
        double t = target(i);
        if (one_sided_) t = std::abs(t);
        if (diag) {
            out(i) = Complex(interp_point(omega_, re, t, /*loglog=*/true), 0.0);
        } else {
            out(i) = Complex(interp_point(omega_, re, t, false),
                             interp_point(omega_, im, t, false));
        }
    }
    return out;
}

double Spectrum::band_power(int a) const {
    const RVector grid = two_sided_grid(omega_);
    const CVector s = values_on(a, a, grid);
    const RVector w = trapezoid_weights(grid);
    double acc = 0.0;
    for (int i = 0; i < grid.size(); ++i) acc += w(i) * s(i).real();
    return acc / (2.0 * std::numbers::pi);
}

int Spectrum::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (ids_[i] == id) return static_cast<int>(i);
    return -1;
}

}  // namespace qff
