#include "qff/io.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace qff::io {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError("malformed JSON in '" + path + "': " + e.what());
    }
}

CMatrix parse_complex_matrix(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty())
        throw ParseError(what + ": expected a nested array matrix");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    CMatrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ParseError(what + ": ragged matrix rows");
        for (std::size_t c = 0; c < cols; ++c) {
            const json& e = j[r][c];
            if (e.is_number()) {
                m(r, c) = Complex(e.get<double>(), 0.0);
            } else if (e.is_array() && e.size() == 2) {
                m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
            } else {
                throw ParseError(what + ": entries must be numbers or [re, im]");
            }
        }
    }
    return m;
}

json dump_complex_matrix(const CMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

RVector parse_real_vector(const json& j, const std::string& what) {
    if (!j.is_array()) throw ParseError(what + ": expected an array");
    RVector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError(what + ": expected numbers");
        v(static_cast<int>(i)) = j[i].get<double>();
    }
    return v;
}

std::shared_ptr<const Basis> parse_basis_spec(const json& j, int dim) {
    if (j.is_string()) {
        const std::string kind = j.get<std::string>();
        if (kind == "pauli") {
            int n = 0;
            while ((1 << n) < dim) ++n;
            if ((1 << n) != dim)
                throw ValidationError("pauli basis requires a power-of-two "
                                      "dimension");
            return std::make_shared<const Basis>(Basis::pauli(n));
        }
        if (kind == "ggm")
            return std::make_shared<const Basis>(Basis::ggm(dim));
        throw ParseError("unknown basis kind '" + kind + "'");
    }
    if (j.is_object() && j.contains("custom"))
        return std::make_shared<const Basis>(
            load_basis(j.at("custom").get<std::string>()));
    throw ParseError("basis must be \"pauli\", \"ggm\" or {\"custom\": path}");
}

// %.17g round-trips doubles exactly and keeps outputs byte-stable
std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

PulseSequence load_pulse(const std::string& path) {
    const json j = parse_file(path);
    if (!j.contains("dim") || !j.contains("dt"))
        throw ParseError("pulse file needs 'dim' and 'dt'");
    const int dim = j.at("dim").get<int>();
    const RVector dt = parse_real_vector(j.at("dt"), "dt");
    const int segments = static_cast<int>(dt.size());

    std::vector<CMatrix> control_ops;
    std::vector<RVector> control_rows;
    if (j.contains("control")) {
        for (const auto& term : j.at("control")) {
            control_ops.push_back(parse_complex_matrix(term.at("op"), "control op"));
            control_rows.push_back(parse_real_vector(term.at("coeffs"), "coeffs"));
        }
    }
    RMatrix coeffs(static_cast<int>(control_ops.size()), segments);
    for (std::size_t i = 0; i < control_rows.size(); ++i) {
        if (control_rows[i].size() != segments)
            throw ParseError("control coeffs must have one entry per segment");
        coeffs.row(static_cast<int>(i)) = control_rows[i];
    }

    std::vector<CMatrix> noise_ops;
    std::vector<RVector> sens_rows;
    std::vector<std::string> ids;
    if (j.contains("noise")) {
        for (const auto& term : j.at("noise")) {
            noise_ops.push_back(parse_complex_matrix(term.at("op"), "noise op"));
            sens_rows.push_back(parse_real_vector(term.at("sens"), "sens"));
            ids.push_back(term.contains("id")
                              ? term.at("id").get<std::string>()
                              : std::to_string(ids.size()));
        }
    }
    RMatrix sens(static_cast<int>(noise_ops.size()), segments);
    for (std::size_t i = 0; i < sens_rows.size(); ++i) {
        if (sens_rows[i].size() != segments)
            throw ParseError("noise sens must have one entry per segment");
        sens.row(static_cast<int>(i)) = sens_rows[i];
    }

    auto basis = j.contains("basis")
                     ? parse_basis_spec(j.at("basis"), dim)
                     : parse_basis_spec(json("pauli"), dim);
    if (basis->dim() != dim)
        throw ValidationError("basis dimension does not match pulse dim");
    return PulseSequence(std::move(control_ops), std::move(coeffs),
                         std::move(noise_ops), std::move(sens), dt, basis,
                         std::move(ids));
}

void save_pulse(const PulseSequence& p, const std::string& path) {
    json j;
    j["dim"] = p.dim();
    j["dt"] = std::vector<double>(p.dt().data(), p.dt().data() + p.dt().size());
    json control = json::array();
    for (int i = 0; i < p.n_control(); ++i) {
        json term;
        term["op"] = dump_complex_matrix(p.control_ops()[i]);
        term["coeffs"] = std::vector<double>(
            p.control_coeffs().row(i).data(),
            p.control_coeffs().row(i).data() + p.n_segments());
        control.push_back(std::move(term));
    }
    j["control"] = std::move(control);
    json noise = json::array();
    for (int a = 0; a < p.n_noise(); ++a) {
        json term;
        term["op"] = dump_complex_matrix(p.noise_ops()[a]);
        RVector row = p.noise_sens().row(a);
        term["sens"] = std::vector<double>(row.data(), row.data() + row.size());
        term["id"] = p.noise_ids()[a];
        noise.push_back(std::move(term));
    }
    j["noise"] = std::move(noise);
    switch (p.basis().kind()) {
        case BasisKind::Pauli: j["basis"] = "pauli"; break;
        case BasisKind::GGM: j["basis"] = "ggm"; break;
        case BasisKind::Custom:
            throw ValidationError("cannot serialize a pulse with a custom basis");
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

Spectrum load_spectrum(const std::string& path,
                       const std::vector<std::string>& default_ids,
                       double freq_scale) {
    const json j = parse_file(path);

    if (j.contains("model")) {
        const std::string model = j.at("model").get<std::string>();
        const json& grid_spec = j.at("grid");
        const std::string type = grid_spec.value("type", "log");
        const int n = grid_spec.at("n").get<int>();
        const double lo = grid_spec.at("min").get<double>() * freq_scale;
        const double hi = grid_spec.at("max").get<double>() * freq_scale;
        const RVector grid =
            type == "log" ? log_grid(lo, hi, n) : linear_grid(lo, hi, n);
        const json params = j.value("params", json::object());
        auto make_single = [&](const std::string& id) {
            if (model == "white")
                return Spectrum::white(params.at("level").get<double>(), grid, id);
            if (model == "power_law")
                return Spectrum::power_law(params.at("amplitude").get<double>(),
                                           params.at("exponent").get<double>(),
                                           grid, id);
            throw ParseError("unknown spectrum model '" + model + "'");
        };
        if (j.contains("id")) return make_single(j.at("id").get<std::string>());
        if (default_ids.empty()) return make_single("0");
        if (default_ids.size() == 1) return make_single(default_ids[0]);
        std::vector<Spectrum> parts;
        for (const auto& id : default_ids) parts.push_back(make_single(id));
        return Spectrum::diagonal(parts);
    }

    if (!j.contains("omega") || !j.contains("S"))
        throw ParseError("spectrum file needs 'omega' and 'S' (or 'model')");
    RVector omega = parse_real_vector(j.at("omega"), "omega") * freq_scale;

    // collect source ids: explicit "ids" wins, else first-appearance order
    std::vector<std::string> ids;
    if (j.contains("ids"))
        for (const auto& id : j.at("ids")) ids.push_back(id.get<std::string>());
    auto id_index = [&](const std::string& id) {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return static_cast<int>(i);
        ids.push_back(id);
        return static_cast<int>(ids.size()) - 1;
    };

    std::map<std::pair<int, int>, CVector> entries;
    for (const auto& [key, value] : j.at("S").items()) {
        const auto comma = key.find(',');
        if (comma == std::string::npos)
            throw ParseError("spectrum entry keys must be 'id_a,id_b'");
        const int a = id_index(key.substr(0, comma));
        const int b = id_index(key.substr(comma + 1));
        CVector v(omega.size());
        if (!value.is_array() || static_cast<Eigen::Index>(value.size()) != omega.size())
            throw ParseError("spectrum entry '" + key + "' shape mismatch");
        for (std::size_t i = 0; i < value.size(); ++i) {
            const json& e = value[i];
            if (e.is_number())
                v(static_cast<int>(i)) = Complex(e.get<double>(), 0.0);
            else if (e.is_array() && e.size() == 2)
                v(static_cast<int>(i)) =
                    Complex(e[0].get<double>(), e[1].get<double>());
            else
                throw ParseError("spectrum entries must be numbers or [re, im]");
        }
        entries[{a, b}] = std::move(v);
    }
    return Spectrum::tabulated(std::move(omega), std::move(ids),
                               std::move(entries));
}

Basis load_basis(const std::string& path) {
    const json j = parse_file(path);
    if (!j.is_array() || j.empty())
        throw ParseError("basis file must be a nonempty array of matrices");
    std::vector<CMatrix> elements;
    for (const auto& m : j)
        elements.push_back(parse_complex_matrix(m, "basis element"));
    const int d = static_cast<int>(elements[0].rows());
    if (static_cast<int>(elements.size()) == d * d)
        return Basis::custom(std::move(elements));
    return Basis::complete(elements);
}

CMatrix load_matrix(const std::string& path) {
    return parse_complex_matrix(parse_file(path), path);
}

void write_matrix_json(std::ostream& os, const CMatrix& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    json re = json::array(), im = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json re_row = json::array(), im_row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            re_row.push_back(m(r, c).real());
            im_row.push_back(m(r, c).imag());
        }
        re.push_back(std::move(re_row));
        im.push_back(std::move(im_row));
    }
    j["real"] = std::move(re);
    j["imag"] = std::move(im);
    os << j.dump(2) << '\n';
}

void save_matrix_json(const CMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_matrix_json(out, m);
}

void save_matrix_csv(const CMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "# real part, then imaginary part, row-major\n";
    for (int block = 0; block < 2; ++block)
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                if (c) out << ',';
                out << fmt(block == 0 ? m(r, c).real() : m(r, c).imag());
            }
            out << '\n';
        }
}

void write_curves_csv(std::ostream& os, const RVector& omega,
                      const RMatrix& rows_per_label,
                      const std::vector<std::string>& labels,
                      double freq_scale_out) {
    if (rows_per_label.rows() != static_cast<Eigen::Index>(labels.size()) ||
        rows_per_label.cols() != omega.size())
        throw ValidationError("curve CSV: shape mismatch");
    os << "omega";
    for (const auto& l : labels) os << ',' << l;
    os << '\n';
    for (int w = 0; w < omega.size(); ++w) {
        os << fmt(omega(w) / freq_scale_out);
        for (Eigen::Index r = 0; r < rows_per_label.rows(); ++r)
            os << ',' << fmt(rows_per_label(r, w));
        os << '\n';
    }
}

void save_curves_csv(const std::string& path, const RVector& omega,
                     const RMatrix& rows_per_label,
                     const std::vector<std::string>& labels,
                     double freq_scale_out) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write_curves_csv(out, omega, rows_per_label, labels, freq_scale_out);
}

}  // namespace qff::io
