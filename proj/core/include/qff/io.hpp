#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "qff/basis.hpp"
#include "qff/pulse.hpp"
#include "qff/spectrum.hpp"
#include "qff/types.hpp"

namespace qff::io {

/// Pulse definition file:
///   {"dim": d, "dt": [...],
///    "control": [{"op": M, "coeffs": [...]}, ...],
///    "noise":   [{"op": M, "sens": [...], "id": "..."}, ...],
///    "basis": "pauli" | "ggm" | {"custom": "path"}}
/// where complex matrices M are nested arrays of [re, im] pairs,
/// row-major. All frequencies are angular.
PulseSequence load_pulse(const std::string& path);
void save_pulse(const PulseSequence& p, const std::string& path);

/// Spectrum file, either tabulated
///   {"omega": [...], "S": {"id_a,id_b": [[re,im], ...] | [s, ...]}}
/// or a model
///   {"model": "white"|"power_law", "params": {...},
///    "grid": {"type": "log"|"linear", "n": .., "min": .., "max": ..}}.
/// A single-source model is replicated over default_ids when given.
/// freq_scale multiplies all file frequencies on ingest (2*pi for --hz).
Spectrum load_spectrum(const std::string& path,
                       const std::vector<std::string>& default_ids = {},
                       double freq_scale = 1.0);

/// Custom basis file: a JSON array of complex matrices. Completed via the
/// null-space construction when fewer than d^2 elements are given.
Basis load_basis(const std::string& path);

/// Single complex matrix (e.g. a projector) as nested [re, im] pairs.
CMatrix load_matrix(const std::string& path);

/// Transfer matrices and other complex matrices as JSON
/// {"rows": r, "cols": c, "real": [[..]], "imag": [[..]]} (row-major).
void save_matrix_json(const CMatrix& m, const std::string& path);
void write_matrix_json(std::ostream& os, const CMatrix& m);

/// Matrix in CSV form: real block then imaginary block, row-major.
void save_matrix_csv(const CMatrix& m, const std::string& path);

/// Curve CSV: column "omega" followed by one column per label.
/// freq_scale_out divides the frequency column on egress (2*pi for --hz).
void write_curves_csv(std::ostream& os, const RVector& omega,
                      const RMatrix& rows_per_label,
                      const std::vector<std::string>& labels,
                      double freq_scale_out = 1.0);
void save_curves_csv(const std::string& path, const RVector& omega,
                     const RMatrix& rows_per_label,
                     const std::vector<std::string>& labels,
                     double freq_scale_out = 1.0);

}  // namespace qff::io
