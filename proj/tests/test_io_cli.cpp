#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qff/control_matrix.hpp"
#include "qff/io.hpp"
#include "qff/metrics.hpp"
#include "test_helpers.hpp"

using namespace qff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("qff_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

const char* kEchoPulse = R"({
  "dim": 2,
  "dt": [1.0, 0.001, 1.0],
  "control": [{"op": [[0, [0.5, 0]], [[0.5, 0], 0]],
               "coeffs": [0.0, 3141.592653589793, 0.0]}],
  "noise": [{"op": [[[0.5, 0], 0], [0, [-0.5, 0]]],
             "sens": [1.0, 1.0, 1.0], "id": "z"}],
  "basis": "pauli"
})";

const char* kFidPulse = R"({
  "dim": 2,
  "dt": [1.0],
  "control": [],
  "noise": [{"op": [[[0.5, 0], 0], [0, [-0.5, 0]]], "sens": [1.0], "id": "z"}],
  "basis": "pauli"
})";

const char* kWhiteSpectrum = R"({
  "model": "white",
  "params": {"level": 0.01},
  "grid": {"type": "log", "n": 400, "min": 1e-3, "max": 1e3}
})";

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

#ifdef QFF_CLI_PATH
CliResult run_cli(const TempDir& dir, const std::string& args) {
    const std::string out_file = dir.file("stdout.txt");
    const std::string err_file = dir.file("stderr.txt");
    const std::string cmd = std::string(QFF_CLI_PATH) + " " + args + " > " +
                            out_file + " 2> " + err_file;
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WEXITSTATUS(rc);
    auto slurp = [](const std::string& p) {
        std::ifstream in(p);
        std::ostringstream os;
        os << in.rdbuf();
        return os.str();
    };
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}
#endif

}  // namespace

TEST_CASE("pulse file round trip") {
    TempDir dir;
    write_file(dir.file("echo.json"), kEchoPulse);
    const PulseSequence p = io::load_pulse(dir.file("echo.json"));
    CHECK(p.dim() == 2);
    CHECK(p.n_segments() == 3);
    CHECK(p.noise_ids()[0] == "z");
    CHECK(p.control_coeffs()(0, 1) == doctest::Approx(1000.0 * std::numbers::pi));

    io::save_pulse(p, dir.file("copy.json"));
    const PulseSequence q = io::load_pulse(dir.file("copy.json"));
    CHECK((q.dt() - p.dt()).norm() == 0.0);
    CHECK((q.control_coeffs() - p.control_coeffs()).norm() == 0.0);
    for (int i = 0; i < p.n_control(); ++i)
        CHECK((q.control_ops()[i] - p.control_ops()[i]).norm() == 0.0);
    for (int a = 0; a < p.n_noise(); ++a)
        CHECK((q.noise_ops()[a] - p.noise_ops()[a]).norm() == 0.0);
}

TEST_CASE("pulse file errors") {
    TempDir dir;
    write_file(dir.file("bad.json"), "{ not json");
    CHECK_THROWS_AS(io::load_pulse(dir.file("bad.json")), ParseError);
    try {
        io::load_pulse(dir.file("bad.json"));
    } catch (const ParseError& e) {
        // parse errors carry position information
        CHECK(std::string(e.what()).find("parse error at") != std::string::npos);
    }
    write_file(dir.file("nodim.json"), R"({"dt": [1.0]})");
    CHECK_THROWS_AS(io::load_pulse(dir.file("nodim.json")), ParseError);
    write_file(dir.file("zerodt.json"), R"({
      "dim": 2, "dt": [0.0],
      "noise": [{"op": [[[0.5,0],0],[0,[-0.5,0]]], "sens": [1.0], "id": "z"}],
      "basis": "pauli"})");
    CHECK_THROWS_AS(io::load_pulse(dir.file("zerodt.json")), ValidationError);
}

TEST_CASE("spectrum files") {
    TempDir dir;
    write_file(dir.file("white.json"), kWhiteSpectrum);
    const Spectrum s = io::load_spectrum(dir.file("white.json"), {"z"});
    CHECK(s.n_sources() == 1);
    CHECK(s.source_ids()[0] == "z");
    CHECK(s.omega().size() == 400);
    CHECK(s.values_on(0, 0, s.omega())(0).real() == doctest::Approx(0.01));

    // hz conversion scales the grid by 2 pi
    const Spectrum s_hz =
        io::load_spectrum(dir.file("white.json"), {"z"}, 2.0 * std::numbers::pi);
    CHECK(s_hz.omega()(0) ==
          doctest::Approx(2.0 * std::numbers::pi * 1e-3).epsilon(1e-12));

    // replicated across several default ids
    const Spectrum s3 = io::load_spectrum(dir.file("white.json"), {"x", "y", "q"});
    CHECK(s3.n_sources() == 3);
    CHECK(s3.diagonal_only());

    write_file(dir.file("tab.json"), R"({
      "omega": [1.0, 2.0, 4.0],
      "S": {"a,a": [1.0, 0.5, 0.25],
            "b,b": [2.0, 1.0, 0.5],
            "a,b": [[0.1, 0.02], [0.05, 0.01], [0.02, 0.005]]}
    })");
    const Spectrum tab = io::load_spectrum(dir.file("tab.json"));
    CHECK(tab.n_sources() == 2);
    CHECK_FALSE(tab.diagonal_only());
    RVector probe(1);
    probe << 2.0;
    CHECK(tab.values_on(1, 0, probe)(0) ==
          Complex(0.05, -0.01));  // conjugate auto-fill

    write_file(dir.file("badmodel.json"),
               R"({"model": "pink", "params": {}, "grid": {"n": 4, "min": 1, "max": 2}})");
    CHECK_THROWS_AS(io::load_spectrum(dir.file("badmodel.json")), ParseError);
}

TEST_CASE("custom basis file completes partial sets") {
    TempDir dir;
    // the normalized identity as the only element; completion adds the rest
    char partial[160];
    std::snprintf(partial, sizeof partial,
                  "[[[%.17g,[0,0]],[[0,0],%.17g]]]", 1.0 / std::sqrt(2.0),
                  1.0 / std::sqrt(2.0));
    write_file(dir.file("partial.json"), partial);
    const Basis b = io::load_basis(dir.file("partial.json"));
    CHECK(b.size() == 4);
    CHECK(b.kind() == BasisKind::Custom);

    // a full pauli basis loads as custom
    const Basis p = Basis::pauli(1);
    std::ostringstream full;
    full.precision(17);
    full << "[";
    for (int k = 0; k < 4; ++k) {
        if (k) full << ",";
        full << "[";
        for (int r = 0; r < 2; ++r) {
            if (r) full << ",";
            full << "[";
            for (int c = 0; c < 2; ++c) {
                if (c) full << ",";
                full << "[" << p.element(k)(r, c).real() << ","
                     << p.element(k)(r, c).imag() << "]";
            }
            full << "]";
        }
        full << "]";
    }
    full << "]";
    write_file(dir.file("full.json"), full.str());
    const Basis loaded = io::load_basis(dir.file("full.json"));
    CHECK(loaded.size() == 4);
    for (int k = 0; k < 4; ++k)
        CHECK((loaded.element(k) - p.element(k)).norm() < 1e-12);
}

TEST_CASE("matrix and curve writers") {
    TempDir dir;
    CMatrix m(2, 2);
    m << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(7, 8);
    io::save_matrix_json(m, dir.file("m.json"));
    std::ifstream jin(dir.file("m.json"));
    std::ostringstream jos;
    jos << jin.rdbuf();
    CHECK(jos.str().find("\"real\"") != std::string::npos);
    CHECK(jos.str().find("\"imag\"") != std::string::npos);
    io::save_matrix_csv(m, dir.file("m.csv"));
    std::ifstream in(dir.file("m.csv"));
    std::string header, line1;
    std::getline(in, header);
    std::getline(in, line1);
    CHECK(line1 == "1,3");

    RVector omega(2);
    omega << 1.0, 2.0;
    RMatrix f(1, 2);
    f << 0.5, 0.25;
    std::ostringstream os;
    io::write_curves_csv(os, omega, f, {"F_z"});
    CHECK(os.str() == "omega,F_z\n1,0.5\n2,0.25\n");
}

#ifdef QFF_CLI_PATH

TEST_CASE("cli filter-function on the echo pulse") {
    TempDir dir;
    write_file(dir.file("echo.json"), kEchoPulse);
    const auto r = run_cli(dir, "filter-function --pulse " + dir.file("echo.json") +
                                    " --omega-min 1e-4 --omega-max 1e2 "
                                    "--omega-n 40");
    REQUIRE(r.exit_code == 0);
    std::istringstream is(r.out);
    std::string header;
    std::getline(is, header);
    CHECK(header == "omega,F_z");
    double w, f, first_f = -1;
    char comma;
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        ls >> w >> comma >> f;
        if (rows == 0) first_f = f;
        ++rows;
    }
    CHECK(rows == 40);
    // echo filter function vanishes towards DC
    CHECK(first_f < 1e-6);
}

TEST_CASE("cli output is deterministic") {
    TempDir dir;
    write_file(dir.file("echo.json"), kEchoPulse);
    const std::string args = "filter-function --pulse " + dir.file("echo.json") +
                             " --omega-min 1e-2 --omega-max 10 --omega-n 16";
    const auto a = run_cli(dir, args);
    const auto b = run_cli(dir, args);
    CHECK(a.exit_code == 0);
    CHECK(a.out == b.out);  // byte-identical
}

TEST_CASE("cli infidelity of white-noise free induction") {
    TempDir dir;
    write_file(dir.file("fid.json"), kFidPulse);
    write_file(dir.file("white.json"), kWhiteSpectrum);
    const auto r = run_cli(dir, "infidelity --pulse " + dir.file("fid.json") +
                                    " --spectrum " + dir.file("white.json"));
    REQUIRE(r.exit_code == 0);
    // S0 tau / 4 = 2.5e-3 up to band truncation
    const auto pos = r.out.find("\"total\"");
    REQUIRE(pos != std::string::npos);
    const double total = std::strtod(r.out.c_str() + pos + 9, nullptr);
    CHECK(total == doctest::Approx(0.01 / 4.0).epsilon(0.01));
    CHECK(r.out.find("xi_squared") != std::string::npos);
}

TEST_CASE("cli exit codes and error json") {
    TempDir dir;
    write_file(dir.file("broken.json"), "{ nope");
    write_file(dir.file("white.json"), kWhiteSpectrum);
    const auto parse_fail =
        run_cli(dir, "filter-function --pulse " + dir.file("broken.json") +
                         " --omega-min 0.1 --omega-max 1 --omega-n 4");
    CHECK(parse_fail.exit_code == 1);
    CHECK(parse_fail.err.find("\"kind\":\"parse\"") != std::string::npos);

    write_file(dir.file("zerodt.json"), R"({
      "dim": 2, "dt": [0.0],
      "noise": [{"op": [[[0.5,0],0],[0,[-0.5,0]]], "sens": [1.0], "id": "z"}],
      "basis": "pauli"})");
    const auto validation_fail =
        run_cli(dir, "filter-function --pulse " + dir.file("zerodt.json") +
                         " --omega-min 0.1 --omega-max 1 --omega-n 4");
    CHECK(validation_fail.exit_code == 2);
    CHECK(validation_fail.err.find("\"kind\":\"validation\"") !=
          std::string::npos);

    const auto cli_fail = run_cli(dir, "filter-function");
    CHECK(cli_fail.exit_code == 1);
}

TEST_CASE("cli transfer matrix has exact borders") {
    TempDir dir;
    write_file(dir.file("fid.json"), kFidPulse);
    write_file(dir.file("white.json"), kWhiteSpectrum);
    const auto r =
        run_cli(dir, "transfer-matrix --pulse " + dir.file("fid.json") +
                         " --spectrum " + dir.file("white.json") +
                         " --out " + dir.file("tm.json"));
    REQUIRE(r.exit_code == 0);
    std::ifstream in(dir.file("tm.json"));
    std::ostringstream os;
    os << in.rdbuf();
    const std::string tm = os.str();
    CHECK(tm.find("\"real\"") != std::string::npos);
    // first row starts with exactly 1.0, 0.0, ...
    const auto p = tm.find("[");
    CHECK(p != std::string::npos);
}

TEST_CASE("cli concat equals monolithic filter function") {
    TempDir dir;
    write_file(dir.file("fid.json"), kFidPulse);
    write_file(dir.file("echo.json"), kEchoPulse);
    // build the echo out of fid + pi + fid pulse files
    write_file(dir.file("pi.json"), R"({
      "dim": 2, "dt": [0.001],
      "control": [{"op": [[0, [0.5, 0]], [[0.5, 0], 0]],
                   "coeffs": [3141.592653589793]}],
      "noise": [{"op": [[[0.5, 0], 0], [0, [-0.5, 0]]], "sens": [1.0],
                 "id": "z"}],
      "basis": "pauli"})");
    const std::string grid = " --omega-min 1e-3 --omega-max 10 --omega-n 24";
    const auto joined =
        run_cli(dir, "concat --pulse " + dir.file("fid.json") + " --pulse " +
                         dir.file("pi.json") + " --pulse " + dir.file("fid.json") +
                         grid + " --out-pulse " + dir.file("merged.json"));
    REQUIRE(joined.exit_code == 0);
    const auto mono =
        run_cli(dir, "filter-function --pulse " + dir.file("echo.json") + grid);
    REQUIRE(mono.exit_code == 0);

    auto parse_csv = [](const std::string& text) {
        std::vector<double> values;
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);  // header
        while (std::getline(is, line)) {
            const auto comma = line.find(',');
            values.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
        }
        return values;
    };
    const auto a = parse_csv(joined.out);
    const auto b = parse_csv(mono.out);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    // merged pulse file is loadable
    CHECK(io::load_pulse(dir.file("merged.json")).n_segments() == 3);
}

TEST_CASE("cli periodic with one repetition matches filter-function") {
    TempDir dir;
    write_file(dir.file("fid.json"), kFidPulse);
    const std::string grid = " --omega-min 1e-2 --omega-max 10 --omega-n 12";
    const auto once =
        run_cli(dir, "periodic --pulse " + dir.file("fid.json") + " --reps 1" + grid);
    const auto plain =
        run_cli(dir, "filter-function --pulse " + dir.file("fid.json") + grid);
    REQUIRE(once.exit_code == 0);
    REQUIRE(plain.exit_code == 0);
    // the Neumann-series path solves a linear system, so compare numerically
    auto parse_csv = [](const std::string& text) {
        std::vector<double> values;
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            const auto comma = line.find(',');
            values.push_back(std::strtod(line.c_str() + comma + 1, nullptr));
        }
        return values;
    };
    const auto a = parse_csv(once.out);
    const auto b = parse_csv(plain.out);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("cli --hz converts the frequency axis both ways") {
    TempDir dir;
    write_file(dir.file("fid.json"), kFidPulse);
    // same physical grid, specified once in angular and once in ordinary
    // frequency units
    const auto angular = run_cli(
        dir, "filter-function --pulse " + dir.file("fid.json") +
                 " --omega-min 0.62831853071795865 "
                 "--omega-max 62.831853071795865 --omega-n 8");
    const auto ordinary = run_cli(
        dir, "--hz filter-function --pulse " + dir.file("fid.json") +
                 " --omega-min 0.1 --omega-max 10 --omega-n 8");
    REQUIRE(angular.exit_code == 0);
    REQUIRE(ordinary.exit_code == 0);
    auto parse = [](const std::string& text) {
        std::vector<std::pair<double, double>> rows;
        std::istringstream is(text);
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
            const auto comma = line.find(',');
            rows.push_back({std::strtod(line.c_str(), nullptr),
                            std::strtod(line.c_str() + comma + 1, nullptr)});
        }
        return rows;
    };
    const auto a = parse(angular.out);
    const auto b = parse(ordinary.out);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        // identical filter function values, frequency column divided by 2 pi
        CHECK(b[i].second == doctest::Approx(a[i].second).epsilon(1e-12));
        CHECK(b[i].first ==
              doctest::Approx(a[i].first / (2.0 * std::numbers::pi))
                  .epsilon(1e-12));
    }
}

TEST_CASE("cli leakage on a qutrit pulse") {
    TempDir dir;
    // 3-level pulse: coupling between levels 1 and 2, dephasing noise on 0-1
    write_file(dir.file("qutrit.json"), R"({
      "dim": 3, "dt": [1.0],
      "control": [{"op": [[0, 0, 0], [0, 0, [0.7, 0]], [0, [0.7, 0], 0]],
                   "coeffs": [1.0]}],
      "noise": [{"op": [[[1, 0], 0, 0], [0, [-1, 0], 0], [0, 0, 0]],
                 "sens": [1.0], "id": "z"}],
      "basis": "ggm"})");
    write_file(dir.file("white.json"), kWhiteSpectrum);
    write_file(dir.file("proj.json"), "[[1,0,0],[0,1,0],[0,0,0]]");
    const auto r = run_cli(dir, "leakage --pulse " + dir.file("qutrit.json") +
                                    " --spectrum " + dir.file("white.json") +
                                    " --projector " + dir.file("proj.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("error_channel") != std::string::npos);
    CHECK(r.out.find("leakage") != std::string::npos);
    CHECK(r.out.find("seepage") != std::string::npos);
}

TEST_CASE("cli mc-validate agrees within noise") {
    TempDir dir;
    write_file(dir.file("fid.json"), kFidPulse);
    write_file(dir.file("white.json"), R"({
      "model": "white", "params": {"level": 0.004},
      "grid": {"type": "log", "n": 600, "min": 1e-3, "max": 3216.9908772759482}
    })");
    const auto r = run_cli(dir, "mc-validate --pulse " + dir.file("fid.json") +
                                    " --spectrum " + dir.file("white.json") +
                                    " --traj 800 --sub 1024 --seed 5");
    REQUIRE(r.exit_code == 0);
    const auto pos = r.out.find("\"discrepancy_sigma\"");
    REQUIRE(pos != std::string::npos);
    const double sigma = std::strtod(r.out.c_str() + pos + 21, nullptr);
    CHECK(sigma < 4.0);
}

TEST_CASE("cli bench runs tiny dims") {
    TempDir dir;
    const auto r = run_cli(dir,
                           "bench --dims 2,3 --traj 10 --sub 8 --timeout 20");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("d,method,wall_seconds,estimate,stderr") !=
          std::string::npos);
    CHECK(r.out.find("ff_liouville") != std::string::npos);
    CHECK(r.out.find("# fit") != std::string::npos);
}

#endif  // QFF_CLI_PATH
