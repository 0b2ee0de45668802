#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qff/types.hpp"

namespace qff {

/// Log-spaced grid of n points in [lo, hi], lo > 0.
RVector log_grid(double lo, double hi, int n);
/// Linearly spaced grid of n points in [lo, hi].
RVector linear_grid(double lo, double hi, int n);
/// Mirrors a nonnegative grid about zero (no duplicate zero point).
RVector two_sided_grid(const RVector& omega);
/// Trapezoidal quadrature weights for an increasing grid (>= 2 points).
RVector trapezoid_weights(const RVector& x);

/// Two-sided noise cross power spectral density sampled on a frequency
/// grid (angular frequencies). Spectra are per angular frequency, so the
/// noise power is <b^2> = int dw/2pi S(w).
///
/// A grid with only nonnegative frequencies is interpreted as one-sided
/// and symmetrized, S(-w) := S(w) (classical noise). Immutable.
class Spectrum {
public:
    /// Constant spectrum S(w) = level on the grid, single source.
    static Spectrum white(double level, RVector omega, std::string id = "0");

    /// S(w) = amplitude / |w|^exponent. The grid must exclude w = 0 when
    /// exponent > 0.
    static Spectrum power_law(double amplitude, double exponent, RVector omega,
                              std::string id = "0");

    /// Diagonal spectra stored verbatim, one value row per source.
    static Spectrum tabulated_diagonal(RVector omega, std::vector<RVector> values,
                                       std::vector<std::string> ids);

    /// General cross-spectrum. Missing (b,a) entries are filled with the
    /// conjugate of (a,b); explicitly inconsistent pairs are rejected.
    static Spectrum tabulated(RVector omega, std::vector<std::string> ids,
                              std::map<std::pair<int, int>, CVector> entries);

    /// Merges single-source spectra on identical grids into one diagonal
    /// multi-source spectrum.
    static Spectrum diagonal(const std::vector<Spectrum>& singles);

    int n_sources() const { return static_cast<int>(ids_.size()); }
    const std::vector<std::string>& source_ids() const { return ids_; }
    const RVector& omega() const { return omega_; }
    bool one_sided() const { return one_sided_; }
    bool diagonal_only() const { return diagonal_only_; }

    /// S_ab evaluated on an arbitrary target grid (may contain negative
    /// frequencies). Exact when the target matches the stored grid;
    /// otherwise diagonal entries are interpolated linearly in log-log
    /// (exact for power laws) and cross entries linearly.
    CVector values_on(int a, int b, const RVector& target) const;

    /// int dw/2pi S_aa over the two-sided extension of the stored grid.
    double band_power(int a) const;

    /// Index of a source id, or -1.
    int index_of(const std::string& id) const;

private:
    Spectrum() = default;
    void validate() const;
    const CVector* stored(int a, int b) const;

    RVector omega_;
    bool one_sided_ = false;
    bool diagonal_only_ = true;
    std::vector<std::string> ids_;
    std::map<std::pair<int, int>, CVector> values_;
};

}  // namespace qff
