#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <cbmech/io.hpp>
#include <cbmech/scenario.hpp>

using namespace cbmech;
namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

// per-test scratch directory, wiped on entry so reruns start clean
fs::path scratch(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() /
                         ("cbmech-io-" + std::to_string(::getpid())) / leaf;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct CliResult {
    int code = -1;
    std::string out, err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path so = dir / "stdout.txt", se = dir / "stderr.txt";
    const std::string cmd = std::string(CBMECH_CLI_PATH) + " " + args + " > " +
                            so.string() + " 2> " + se.string();
    const int raw = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = read_text(so.string());
    r.err = read_text(se.string());
    return r;
}

bool bit_equal(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

njson load_summary(const fs::path& out_dir) {
    return njson::parse(read_text((out_dir / "summary.json").string()));
}

}  // namespace

TEST_CASE("doubles survive text formatting round trips") {
    std::vector<double> specials = {0.0,
                                    -0.0,
                                    1.0 / 3.0,
                                    M_PI,
                                    5e-324,
                                    -5e-324,
                                    std::numeric_limits<double>::max(),
                                    std::numeric_limits<double>::min(),
                                    std::numeric_limits<double>::denorm_min(),
                                    -1.7976931348623157e308};
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int t = 0; t < 3000; ++t)
        specials.push_back(U(rng) *
                           std::exp2(static_cast<int>(rng() % 1200) - 600));
    for (double x : specials) {
        const std::string s = format_double(x);
        const double y = std::strtod(s.c_str(), nullptr);
        REQUIRE(bit_equal(x, y));
    }
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
    CHECK(format_sig(0.123456, 3) == "0.123");
}

TEST_CASE("csv tables round trip and reject malformed input") {
    const fs::path dir = scratch("csv");
    CsvTable t;
    t.columns = {"a", "b", "c"};
    t.add_row({1.0, 0.5, 1.0 / 3.0});
    t.add_row({-0.0, 5e-324, -2.5e117});
    CHECK(to_csv(t).substr(0, 14) == "a,b,c\n1,0.5,0.");

    const std::string path = (dir / "t.csv").string();
    write_csv(path, t);
    CHECK(read_text(path).find('\r') == std::string::npos);
    const CsvTable u = read_csv(path);
    REQUIRE(u.columns == t.columns);
    REQUIRE(u.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            CHECK(bit_equal(u.rows[r][c], t.rows[r][c]));

    CsvTable bad = t;
    bad.rows.push_back({1.0});  // width 1 vs 3 columns
    CHECK_THROWS_AS(to_csv(bad), ValidationError);

    write_text((dir / "empty.csv").string(), "");
    CHECK_THROWS_AS(read_csv((dir / "empty.csv").string()), ValidationError);
    write_text((dir / "text.csv").string(), "a,b\n1,oops\n");
    CHECK_THROWS_AS(read_csv((dir / "text.csv").string()), ValidationError);

    // CRLF input is tolerated on read even though we never emit it
    write_text((dir / "crlf.csv").string(), "a,b\r\n1,2\r\n");
    const CsvTable w = read_csv((dir / "crlf.csv").string());
    REQUIRE(w.columns == std::vector<std::string>{"a", "b"});
    CHECK(w.rows.at(0) == std::vector<double>{1.0, 2.0});

    CHECK_THROWS_AS(read_csv((dir / "missing.csv").string()), ValidationError);
}

TEST_CASE("json writer emits deterministic ordered documents") {
    JsonValue root = JsonValue::object();
    root.set("b", 1);
    root.set("a", 0.1);
    root.set("s", "x\"y\n");
    JsonValue arr = JsonValue::array();
    arr.push(true);
    arr.push(JsonValue{});
    root.set("arr", std::move(arr));
    root.set("empty", JsonValue::object());
    root.set("b", 2);  // replaces in place, keeps insertion order

    const std::string expect =
        "{\n"
        "  \"b\": 2,\n"
        "  \"a\": 0.10000000000000001,\n"
        "  \"s\": \"x\\\"y\\n\",\n"
        "  \"arr\": [\n"
        "    true,\n"
        "    null\n"
        "  ],\n"
        "  \"empty\": {}\n"
        "}\n";
    CHECK(root.str() == expect);
    CHECK(root.str() == expect);  // stable across repeated serialization

    JsonValue num(2.0);
    CHECK_THROWS_AS(num.push(JsonValue{}), ValidationError);
    CHECK_THROWS_AS(num.set("k", JsonValue{}), ValidationError);
}

TEST_CASE("field files round trip bit-exactly") {
    const fs::path dir = scratch("field");
    const int n[3] = {4, 3, 3};
    const double lo[3] = {-0.5, 0.0, 1.0}, hi[3] = {1.5, 2.0, 3.0};
    const GridPtr g = make_grid(lo, hi, n, 2.5);
    Field<Vec3> f(g);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int idx = 0; idx < g->count(); ++idx)
        for (int c = 0; c < 3; ++c)
            f[idx].v[c] = U(rng) * std::exp2(static_cast<int>(rng() % 80) - 40);
    f[0] = Vec3{1.0 / 3.0, -0.0, 5e-324};

    const std::string csv = (dir / "f.csv").string();
    const std::string hdr = (dir / "f.json").string();
    write_field(csv, hdr, f, 3, "S2");
    CHECK(read_text(csv).find('\r') == std::string::npos);

    const LoadedField lf = read_field(csv, hdr);
    CHECK(lf.manifold_tag == "S2");
    CHECK(lf.ncomp == 3);
    for (int a = 0; a < 3; ++a) {
        CHECK(lf.grid->n[a] == g->n[a]);
        CHECK(bit_equal(lf.grid->lo[a], g->lo[a]));
        CHECK(bit_equal(lf.grid->hi[a], g->hi[a]));
    }
    CHECK(bit_equal(lf.grid->rho0, 2.5));
    for (int idx = 0; idx < g->count(); ++idx)
        for (int c = 0; c < 3; ++c)
            REQUIRE(bit_equal(lf.field[idx].v[c], f[idx].v[c]));

    // scalar field: only v1 is stored, the other slots come back zero
    write_field(csv, hdr, f, 1, "R^1");
    const LoadedField s1 = read_field(csv, hdr);
    CHECK(s1.ncomp == 1);
    CHECK(bit_equal(s1.field[0].v[0], f[0].v[0]));
    CHECK(s1.field[0].v[1] == 0.0);

    CHECK_THROWS_AS(write_field(csv, hdr, f, 0, "S2"), ValidationError);
    CHECK_THROWS_AS(write_field(csv, hdr, f, 4, "S2"), ValidationError);

    write_field(csv, hdr, f, 1, "R^1");
    std::string htext = read_text(hdr);
    const std::string key = "\"components\": 1";
    htext.replace(htext.find(key), key.size(), "\"components\": 2");
    write_text(hdr, htext);
    CHECK_THROWS_AS(read_field(csv, hdr), ValidationError);  // column mismatch

    write_field(csv, hdr, f, 1, "R^1");
    std::string ctext = read_text(csv);
    ctext.erase(ctext.rfind('\n', ctext.size() - 2) + 1);  // drop last data row
    write_text(csv, ctext);
    CHECK_THROWS_AS(read_field(csv, hdr), ValidationError);

    write_field(csv, hdr, f, 1, "R^1");
    ctext = read_text(csv);
    const std::size_t row0 = ctext.find('\n') + 1;
    REQUIRE(ctext.compare(row0, 5, "0,0,0") == 0);
    ctext.replace(row0, 5, "9,0,0");  // node index outside the grid
    write_text(csv, ctext);
    CHECK_THROWS_AS(read_field(csv, hdr), ValidationError);

    write_text(hdr, "{not json");
    CHECK_THROWS_AS(read_field(csv, hdr), ValidationError);
    write_text(hdr, "{\"manifold\": \"S2\"}");
    CHECK_THROWS_AS(read_field(csv, hdr), ValidationError);  // header field missing
}

TEST_CASE("bundled scenario catalog is sorted and complete") {
    const fs::path dir = scratch("list");
    const CliResult r = run_cli("list", dir);
    REQUIRE(r.code == 0);

    std::vector<std::string> names;
    std::istringstream in(r.out);
    std::string line;
    while (std::getline(in, line)) {
        REQUIRE(line.find("  ") != std::string::npos);  // name, two spaces, blurb
        names.push_back(line.substr(0, line.find("  ")));
    }
    CHECK(names.size() >= 6u);
    CHECK(std::is_sorted(names.begin(), names.end()));
    for (const char* expect :
         {"remark4-real-line", "remark4-circle", "remark5-beam", "noether-wave",
          "proposition1-bar", "theorem2-sphere-tension", "minimize-geodesic",
          "microcrack-refinement"})
        CHECK(std::find(names.begin(), names.end(), expect) != names.end());

    const CliResult again = run_cli("list", dir);
    CHECK(again.out == r.out);
}

TEST_CASE("every bundled scenario runs clean at default settings") {
    const fs::path dir = scratch("smoke");
    for (const BundledScenario& b : bundled_scenarios()) {
        const fs::path out = dir / b.name;
        const CliResult r = run_cli("run " + b.name + " --out " + out.string(), dir);
        INFO(b.name << ": " << r.err);
        REQUIRE(r.code == 0);
        const njson summary = load_summary(out);
        CHECK(summary.at("exit_code").get<int>() == 0);
        for (const njson& task : summary.at("tasks"))
            CHECK(task.at("status").get<std::string>() == "ok");
        CHECK(fs::exists(out / "run-metadata.json"));
        const std::string meta = read_text((out / "run-metadata.json").string());
        CHECK(meta.find("timestamp") != std::string::npos);
    }

    // the real-line table carries the analytic bound 9(1/(n+1) - 1/(m+1))
    const CsvTable cauchy =
        read_csv((dir / "remark4-real-line" / "cauchy-cauchy-table.csv").string());
    REQUIRE(cauchy.columns ==
            std::vector<std::string>{"n", "m", "distance", "analytic_bound"});
    REQUIRE(cauchy.rows.size() == 28u);  // pairs 1 <= n < m <= 8
    for (const auto& row : cauchy.rows) {
        const double bound = 9.0 * (1.0 / (row[0] + 1.0) - 1.0 / (row[1] + 1.0));
        CHECK(row[3] == Catch::Approx(bound).margin(1e-12));
        CHECK(row[2] == Catch::Approx(bound).margin(1e-4));
    }

    // the sphere-tension table closes the normal configurational jump at 2σ/R
    const CsvTable sph = read_csv(
        (dir / "theorem2-sphere-tension" / "sphere-sphere-closure.csv").string());
    REQUIRE(sph.columns == std::vector<std::string>{"X1", "X2", "X3", "R_std",
                                                    "R_sub", "closure_dev"});
    REQUIRE(sph.rows.size() == 12u);
    for (const auto& row : sph.rows) CHECK(row[5] < 1e-6);
}

TEST_CASE("scenario configs validate and map failures onto exit codes") {
    const fs::path dir = scratch("codes");

    const fs::path empty = dir / "empty.json";
    write_text(empty.string(), R"({"name": "empty", "seed": 1, "tasks": []})");
    const CliResult ok = run_cli("run " + empty.string() + " --out " +
                                     (dir / "empty-out").string(),
                                 dir);
    CHECK(ok.code == 0);
    const njson esum = load_summary(dir / "empty-out");
    CHECK(esum.at("tasks").empty());
    CHECK(esum.at("exit_code").get<int>() == 0);

    write_text((dir / "broken.json").string(), "{nope");
    const CliResult parse = run_cli("run " + (dir / "broken.json").string(), dir);
    CHECK(parse.code == 1);
    CHECK(parse.err.find("parse error") != std::string::npos);

    const CliResult noname = run_cli("run no-such-scenario", dir);
    CHECK(noname.code == 1);
    CHECK(noname.err.find("list") != std::string::npos);

    write_text((dir / "badtask.json").string(),
               R"({"name": "x", "tasks": [{"type": "telepathy"}]})");
    const CliResult badtask =
        run_cli("run " + (dir / "badtask.json").string() + " --out " +
                    (dir / "badtask-out").string(),
                dir);
    CHECK(badtask.code == 1);
    // task-level errors are captured in the summary with task context
    const njson bsum = load_summary(dir / "badtask-out");
    CHECK(bsum.at("tasks").at(0).at("status").get<std::string>() == "error");
    CHECK(bsum.at("tasks").at(0).at("message").get<std::string>().find(
              "unknown type") != std::string::npos);
    CHECK(bsum.at("exit_code").get<int>() == 1);

    write_text((dir / "badmodel.json").string(), R"({
      "name": "x", "seed": 1,
      "grid": {"n": [5, 1, 1], "lo": [0, 0, 0], "hi": [1, 1, 1]},
      "manifold": "R^1", "model": {"preset": "perpetuum-mobile"},
      "tasks": [{"type": "minimize"}]
    })");
    CHECK(run_cli("run " + (dir / "badmodel.json").string() + " --out " +
                      (dir / "badmodel-out").string(),
                  dir)
              .code == 1);

    // a declared threshold that cannot hold: numerical/task failure, code 2
    // (r_std is bitwise zero on the bar, so the rounding-sized r_cfg is the
    // value that can genuinely exceed an impossible bound)
    write_text((dir / "threshold.json").string(), R"({
      "name": "x", "seed": 1,
      "tasks": [{"type": "residual-suite", "name": "bar", "case": "two-phase-bar",
                 "require": {"max_r_cfg": {"max": 1e-30}}}]
    })");
    const CliResult th = run_cli("run " + (dir / "threshold.json").string() +
                                     " --out " + (dir / "threshold-out").string(),
                                 dir);
    CHECK(th.code == 2);
    const njson tsum = load_summary(dir / "threshold-out");
    CHECK(tsum.at("tasks").at(0).at("status").get<std::string>() ==
          "threshold-failed");
    CHECK(tsum.at("tasks").at(0).at("message").get<std::string>().find(
              "exceeds max") != std::string::npos);
    CHECK(tsum.at("exit_code").get<int>() == 2);
}

TEST_CASE("summaries are byte-identical across reruns") {
    const fs::path dir = scratch("determinism");
    // random init makes the run depend on the config seed and nothing else
    const fs::path cfgp = dir / "well.json";
    write_text(cfgp.string(), R"({
      "name": "det-well", "seed": 7,
      "grid": {"n": [17, 1, 1], "lo": [0, -1, -1], "hi": [1, 1, 1], "rho0": 1.0},
      "manifold": "R^1",
      "model": {"preset": "double-well", "params": {"a": 1.0, "kappa": 0.01}},
      "tasks": [
        {"type": "minimize", "name": "relax",
         "init": {"preset": "random", "value": [0.5, 0, 0], "amplitude": 0.2},
         "gtol": 1e-7, "log_every": 10}
      ]
    })");
    const fs::path a = dir / "a", b = dir / "b";
    REQUIRE(run_cli("run " + cfgp.string() + " --out " + a.string(), dir).code == 0);
    REQUIRE(run_cli("run " + cfgp.string() + " --out " + b.string(), dir).code == 0);

    const std::string sa = read_text((a / "summary.json").string());
    const std::string sb = read_text((b / "summary.json").string());
    CHECK(sa == sb);
    CHECK(sa.find('\r') == std::string::npos);
    CHECK(read_text((a / "relax-energy-history.csv").string()) ==
          read_text((b / "relax-energy-history.csv").string()));
    // the volatile part lives next door, not inside the golden summary
    CHECK(sa.find("timestamp") == std::string::npos);
    CHECK(fs::exists(a / "run-metadata.json"));
}

TEST_CASE("export reproduces stored series as csv") {
    const fs::path dir = scratch("export");
    const fs::path cfgp = dir / "well.json";
    write_text(cfgp.string(), R"({
      "name": "det-well", "seed": 7,
      "grid": {"n": [17, 1, 1], "lo": [0, -1, -1], "hi": [1, 1, 1], "rho0": 1.0},
      "manifold": "R^1",
      "model": {"preset": "double-well", "params": {"a": 1.0, "kappa": 0.01}},
      "tasks": [
        {"type": "minimize", "name": "relax",
         "init": {"preset": "random", "value": [0.5, 0, 0], "amplitude": 0.2},
         "gtol": 1e-7, "log_every": 10}
      ]
    })");
    const fs::path out = dir / "out";
    REQUIRE(run_cli("run " + cfgp.string() + " --out " + out.string(), dir).code == 0);
    const std::string summary = (out / "summary.json").string();

    const CliResult hist = run_cli("export " + summary + " --series energy-history",
                                   dir);
    REQUIRE(hist.code == 0);
    CHECK(hist.out.substr(0, 27) == "iteration,energy,residual\n0");
    // export re-serializes the JSON copy; it must match the CSV written at run time
    CHECK(hist.out == read_text((out / "relax-energy-history.csv").string()));

    const fs::path refp = dir / "ref.json";
    write_text(refp.string(), R"({
      "name": "lemma-ref", "seed": 1,
      "tasks": [{"type": "refinement-study", "name": "lem",
                 "target": "lemma1-sphere"}]
    })");
    const fs::path rout = dir / "rout";
    REQUIRE(run_cli("run " + refp.string() + " --out " + rout.string(), dir).code ==
            0);
    const CliResult ref = run_cli(
        "export " + (rout / "summary.json").string() + " --series refinement", dir);
    REQUIRE(ref.code == 0);
    std::istringstream rin(ref.out);
    std::string line;
    std::getline(rin, line);
    REQUIRE(line == "h,dt,residual");
    int rows = 0;
    while (std::getline(rin, line)) {
        char* end = nullptr;
        const double h = std::strtod(line.c_str(), &end);
        const double res = std::strtod(line.c_str() + line.rfind(',') + 1, nullptr);
        REQUIRE(end != line.c_str());
        CHECK(h > 0.0);  // log-log ready
        CHECK(res > 0.0);
        ++rows;
    }
    CHECK(rows == 4);

    const CliResult miss = run_cli("export " + summary + " --series nope", dir);
    CHECK(miss.code == 1);
    CHECK(miss.err.find("energy-history") != std::string::npos);  // names available
}

TEST_CASE("strict mode promotes warnings to failures") {
    const fs::path dir = scratch("strict");
    // the last two levels resolve to the same grid, so re-coarsening dt can
    // only raise the residual: the sequence is not monotone by construction
    const fs::path cfgp = dir / "warn.json";
    write_text(cfgp.string(), R"({
      "name": "warnful", "seed": 3,
      "tasks": [
        {"type": "refinement-study", "name": "study", "target": "el-bulk-smooth",
         "levels": [[0.5, 0.2], [0.03125, 0.0001], [0.031, 0.2]]}
      ]
    })");
    const CliResult plain = run_cli(
        "run " + cfgp.string() + " --out " + (dir / "plain").string(), dir);
    REQUIRE(plain.code == 0);
    const njson psum = load_summary(dir / "plain");
    REQUIRE(psum.at("tasks").at(0).contains("warnings"));
    CHECK(psum.at("tasks").at(0).at("warnings").at(0).get<std::string>().find(
              "not monotone") != std::string::npos);
    CHECK(psum.at("tasks").at(0).at("status").get<std::string>() == "ok");

    const CliResult strict = run_cli(
        "run " + cfgp.string() + " --strict --out " + (dir / "strict").string(),
        dir);
    CHECK(strict.code == 2);
    CHECK(load_summary(dir / "strict").at("tasks").at(0).at("status")
              .get<std::string>() == "strict-warning");
}
