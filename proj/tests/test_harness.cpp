#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "kinbc/app.hpp"
#include "kinbc/config.hpp"
#include "kinbc/fit.hpp"
#include "kinbc/report.hpp"
#include "support.hpp"

using namespace kinbc;

namespace {

/// Small, fast variant of the mixed-law configuration.
const char* kSmallMixed = R"(
[model]
preset = coplanar
speed = 1
sigma = 0.1

[steady_state]
values = [4, 3, 2, 6]

[domain]
cells = [20, 20]

[time]
dt = 0.01
t_end = 4
record_every = 5

[control]
law = mixed
k2 = 0.1
k3 = 0.1
)";

std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
}

struct Captured {
    std::ostringstream out;
    std::ostringstream err;
    AppContext ctx(const testing::TempDir& dir) {
        AppContext c;
        c.output_dir = dir.path().string();
        c.out = &out;
        c.err = &err;
        return c;
    }
};

}  // namespace

TEST_CASE("config defaults and parsing") {
    const RunConfig cfg = parse_config_string(kSmallMixed);
    CHECK(cfg.model.preset == "coplanar");
    CHECK(cfg.cells == std::vector<int>{20, 20});
    CHECK(cfg.control.law == "mixed");
    CHECK(cfg.control.k2 == 0.1);
    CHECK_FALSE(cfg.alpha.has_value());
    CHECK(cfg.resolved_fit_start() == doctest::Approx(0.8));
    CHECK(cfg.resolved_fit_end() == 4.0);
    CHECK(cfg.initial.values == Eigen::Vector4d::Ones());
}

TEST_CASE("explicit model with one-based collision indices") {
    const RunConfig cfg = parse_config_string(R"(
# hash comments are allowed
[model]
preset = explicit
velocities = [[1, 0], [-1, 0], [0, 1], [0, -1]]
collisions = [[1, 2, 3, 4, 0.25]]
[steady_state]
values = [1, 1, 1, 1]
)");
    const auto model = build_model(cfg);
    REQUIRE(model.channels().size() == 1);
    CHECK(model.channels()[0].first == std::array<int, 2>{0, 1});
    CHECK(model.channels()[0].rate == 0.25);
}

TEST_CASE("config round trip is the identity") {
    RunConfig cfg = parse_config_string(kSmallMixed);
    cfg.alpha = 1.0 / 3.0;
    cfg.fit_start = 0.1;
    cfg.control.interval = {0.25, 2.0 / 3.0};
    cfg.initial.type = "sinusoid";
    cfg.initial.values = Eigen::Vector4d(0.1, 0.2, 0.3, std::acos(-1.0));
    cfg.initial.modes = Eigen::Vector2d(1, 2);
    cfg.snapshot = "field.txt";
    cfg.model.preset = "explicit";
    cfg.model.velocities = Eigen::MatrixXd(2, 1);
    cfg.model.velocities << 1.0, -0.7;
    cfg.model.collisions = {{0, 1, 1, 0, 0.3}};

    const std::string text = serialize_config(cfg);
    const RunConfig back = parse_config_string(text);
    CHECK(serialize_config(back) == text);
    CHECK(*back.alpha == *cfg.alpha);
    CHECK(back.control.interval == cfg.control.interval);
    CHECK(back.initial.values == cfg.initial.values);
    CHECK(back.model.velocities == cfg.model.velocities);
    CHECK(back.model.collisions[0].rate == 0.3);
    CHECK(back.dt == cfg.dt);
    CHECK(*back.fit_start == 0.1);
    CHECK_FALSE(back.fit_end.has_value());
}

TEST_CASE("comments are stripped") {
    const RunConfig cfg = parse_config_string(
        "# leading comment\n[time]\n; another\ndt = 0.25   ; trailing\nt_end = 2\t# also trailing\n"
        "[output]\ndir = out/a;b\n");
    CHECK(cfg.dt == 0.25);
    CHECK(cfg.t_end == 2.0);
    CHECK(cfg.output_dir == "out/a;b");
}

TEST_CASE("malformed configs are rejected") {
    CHECK_THROWS_AS(parse_config_string("[model]\nbogus = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[nonsense]\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[time]\ndt = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[time]\ndt = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_string("[domain]\ncells = [10, x]\n"), ConfigError);
    CHECK_THROWS_AS(build_law(parse_config_string("[control]\nlaw = magic\n")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/kinbc.ini"), ConfigError);
}

TEST_CASE("sinusoidal initial data") {
    RunConfig cfg;
    cfg.initial.type = "sinusoid";
    cfg.initial.values = Eigen::Vector4d(1, 2, 3, 4);
    cfg.initial.modes = Eigen::Vector2d(1, 2);
    const Grid grid(build_domain(cfg), {8, 8});
    const Field f = build_initial_field(cfg, grid, 4);
    const Eigen::Index p = 2 * grid.stride(0) + 1 * grid.stride(1);  // (0.25, 0.125)
    const double pi = std::acos(-1.0);
    const double shape = std::sin(pi * 0.25) * std::sin(2.0 * pi * 0.125);
    CHECK(f(3, p) == doctest::Approx(4.0 * shape).epsilon(1e-14));
}

TEST_CASE("decay fit") {
    std::vector<double> t, n, c;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.1 * k);
        n.push_back(5.0 * std::exp(-0.7 * t.back()));
        c.push_back(2.5);
    }
    const auto fit = fit_decay(t, n, 0.0, 10.0);
    REQUIRE(fit.ok);
    CHECK(fit.rate == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(std::abs(fit.r_squared - 1.0) <= 1e-12);
    CHECK(fit.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-12));

    const auto flat = fit_decay(t, c, 2.0, 10.0);
    REQUIRE(flat.ok);
    CHECK(flat.rate == 0.0);
    CHECK(flat.r_squared == 1.0);
    CHECK(flat.samples == 81);

    std::vector<double> z(t.size(), 0.0);
    const auto bad = fit_decay(t, z, 0.0, 10.0);
    CHECK_FALSE(bad.ok);
    CHECK_FALSE(bad.message.empty());
    CHECK_FALSE(fit_decay(t, n, 9.95, 10.0).ok);
}

TEST_CASE("range parsing") {
    CHECK(parse_range("0:1.5:0.1").size() == 16);
    CHECK(parse_range("0:1.5:0.1").back() == doctest::Approx(1.5));
    CHECK(parse_range("{0.002, 0.001}") == std::vector<double>{0.002, 0.001});
    CHECK(parse_range("1:0:0.1").empty());
    CHECK(parse_range("").empty());
    CHECK_THROWS_AS(parse_range("0:1"), ParameterError);
    CHECK_THROWS_AS(parse_range("0:1:0"), ParameterError);
    CHECK_THROWS_AS(parse_range("a,b"), ParameterError);
    RunConfig cfg;
    apply_parameter(cfg, "k3", 0.4);
    CHECK(cfg.control.k3 == 0.4);
    CHECK_THROWS_AS(apply_parameter(cfg, "sigma", 1.0), ParameterError);
}

TEST_CASE("CSV schema") {
    CHECK(csv_header(4) == "t,l2_norm,lyapunov,boundary_form,norm_f1,norm_f2,norm_f3,norm_f4");
    TimeRecord r;
    r.t = 0.1;
    r.l2_norm = 1.0 / 3.0;
    r.species_norms = Eigen::Vector2d(2.0, 1e-300);
    CHECK(csv_row(r) == "0.10000000000000001,0.33333333333333331,0,0,2,1e-300");
}

TEST_CASE("verify reports the rank-one decomposition") {
    testing::TempDir dir("verify");
    Captured io;
    const auto cfg = dir.file("run.ini", kSmallMixed);
    CHECK(cmd_verify(cfg, io.ctx(dir)) == kExitOk);
    CHECK(io.out.str().find("r                    = 1") != std::string::npos);
    const auto report = read_lines(dir.path() / "report.txt");
    CHECK(std::find(report.begin(), report.end(), std::string(kReportDataMarker)) != report.end());
}

TEST_CASE("verify rejects a non-steady reference state and a zero velocity") {
    testing::TempDir dir("verify_bad");
    Captured io;
    const auto not_steady = dir.file("a.ini", "[model]\npreset = coplanar\n[steady_state]\nvalues = [1, 2, 3, 4]\n");
    CHECK(cmd_verify(not_steady, io.ctx(dir)) == kExitValidation);
    CHECK(io.err.str().find("Q(f_e) residual") != std::string::npos);

    Captured io2;
    const auto zero = dir.file("b.ini",
                               "[model]\npreset = explicit\nvelocities = [[1, 0], [0, 0], [0, 1], [0, -1]]\n"
                               "collisions = [[1, 2, 3, 4, 0.1]]\n");
    CHECK(cmd_verify(zero, io2.ctx(dir)) == kExitValidation);
    CHECK(io2.err.str().find("zero vector") != std::string::npos);

    Captured io3;
    CHECK(cmd_verify((dir.path() / "missing.ini").string(), io3.ctx(dir)) == kExitValidation);
}

TEST_CASE("design verdicts") {
    testing::TempDir dir("design");
    {
        Captured io;
        CHECK(cmd_design(dir.file("ok.ini", kSmallMixed), io.ctx(dir)) == kExitOk);
        CHECK(io.out.str().find("admissibility: admissible") != std::string::npos);
    }
    {
        Captured io;
        std::string text = kSmallMixed;
        text.replace(text.find("k2 = 0.1"), 8, "k2 = 10");
        CHECK(cmd_design(dir.file("bad.ini", text), io.ctx(dir)) == kExitValidation);
        CHECK(io.err.str().find("species 2") != std::string::npos);
    }
    {
        Captured io;
        CHECK(cmd_design(dir.file("zero.ini", "[control]\nlaw = zero\n"), io.ctx(dir)) == kExitOk);
        const auto o = design(parse_config_string("[control]\nlaw = zero\n"));
        CHECK(o.admissibility.margin > 0.0);
    }
}

TEST_CASE("simulate writes the CSV and fits a positive decay rate") {
    testing::TempDir dir("simulate");
    Captured io;
    CHECK(cmd_simulate(dir.file("run.ini", kSmallMixed), io.ctx(dir)) == kExitOk);
    const auto lines = read_lines(dir.path() / "timeseries.csv");
    REQUIRE(lines.size() == 1 + 400 / 5 + 1);
    CHECK(lines[0] == csv_header(4));
    const auto o = simulate(parse_config_string(kSmallMixed), 1);
    CHECK(o.fit.ok);
    CHECK(o.fit.rate > 0.0);
    CHECK(o.fit.r_squared >= 0.95);

    // single-threaded reruns are bitwise identical
    testing::TempDir dir2("simulate2");
    Captured io2;
    CHECK(cmd_simulate(dir2.file("run.ini", kSmallMixed), io2.ctx(dir2)) == kExitOk);
    CHECK(read_lines(dir2.path() / "timeseries.csv") == lines);
}

TEST_CASE("simulate with zero initial data flags the fit") {
    testing::TempDir dir("zero_init");
    Captured io;
    std::string text = kSmallMixed;
    text += "\n[initial]\nvalues = [0, 0, 0, 0]\n";
    CHECK(cmd_simulate(dir.file("run.ini", text), io.ctx(dir)) == kExitOk);
    CHECK(io.out.str().find("nu_fit undefined") != std::string::npos);
    const auto o = simulate(parse_config_string(text), 1);
    for (const auto& r : o.result.records) CHECK(r.l2_norm == 0.0);
}

TEST_CASE("simulate refuses a CFL violation and warns on an inadmissible law") {
    testing::TempDir dir("cfl");
    Captured io;
    std::string text = kSmallMixed;
    text.replace(text.find("dt = 0.01"), 9, "dt = 0.06");
    CHECK(cmd_simulate(dir.file("run.ini", text), io.ctx(dir)) == kExitValidation);
    CHECK(io.err.str().find("CFL") != std::string::npos);
    CHECK_FALSE(std::filesystem::exists(dir.path() / "timeseries.csv"));

    Captured io2;
    std::string bad = kSmallMixed;
    bad.replace(bad.find("t_end = 4"), 9, "t_end = 1");
    bad.replace(bad.find("k2 = 0.1"), 8, "k2 = 10");
    CHECK(cmd_simulate(dir.file("bad.ini", bad), io2.ctx(dir)) == kExitOk);
    CHECK(io2.err.str().find("warning") != std::string::npos);
}

TEST_CASE("collisionless flush-out") {
    const auto o = simulate(parse_config_string(R"(
[model]
preset = coplanar
sigma = 0
[steady_state]
values = [1, 1, 1, 1]
[domain]
cells = [100, 100]
[time]
dt = 0.002
t_end = 2
record_every = 50
[control]
law = zero
[initial]
type = sinusoid
modes = [1, 1]
)"),
                            2);
    for (std::size_t k = 1; k < o.result.records.size(); ++k)
        CHECK(o.result.records[k].l2_norm <= o.result.records[k - 1].l2_norm);
    CHECK(o.result.records.back().t == 2.0);
    CHECK(o.result.records.back().l2_norm <= 1e-12);
}

TEST_CASE("sweep rows") {
    testing::TempDir dir("sweep");
    Captured io;
    const auto cfg = dir.file("run.ini", kSmallMixed);
    AppContext ctx = io.ctx(dir);
    ctx.threads = 3;
    CHECK(cmd_sweep(cfg, "k2", "0:1.5:0.5", ctx) == kExitOk);
    const auto lines = read_lines(dir.path() / "sweep.csv");
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "k2,admissible,nu_fit,r_squared,final_norm,status");

    const auto rows = sweep(parse_config_string(kSmallMixed), "k2", parse_range("0:1.5:0.1"), 4);
    REQUIRE(rows.size() == 16);
    for (const auto& r : rows) {
        REQUIRE(r.ok);
        if (r.admissible) CHECK(r.fit.rate > 0.0);
    }

    const auto dt_rows = sweep(parse_config_string(kSmallMixed), "dt", {0.01, 0.005}, 2);
    REQUIRE(dt_rows[0].ok);
    REQUIRE(dt_rows[1].ok);
    CHECK(std::abs(dt_rows[0].fit.rate - dt_rows[1].fit.rate) <= 0.1 * dt_rows[1].fit.rate);

    Captured io2;
    CHECK(cmd_sweep(cfg, "k2", "1:0:0.1", io2.ctx(dir)) == kExitValidation);
    Captured io3;
    CHECK(cmd_sweep(cfg, "sigma", "0:1:0.5", io3.ctx(dir)) == kExitValidation);
}

TEST_CASE("snapshot file layout") {
    testing::TempDir dir("snapshot");
    Captured io;
    std::string text = kSmallMixed;
    text += "\n[output]\nsnapshot = field.txt\n";
    text.replace(text.find("t_end = 4"), 9, "t_end = 0.1");
    CHECK(cmd_simulate(dir.file("run.ini", text), io.ctx(dir)) == kExitOk);
    const auto lines = read_lines(dir.path() / "field.txt");
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "4 2 21 21 0.10000000000000001");
    CHECK(lines.size() == 1 + 4 * 21 * 21);
}
