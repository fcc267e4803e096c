#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rdslab/config.hpp"
#include "rdslab/report_io.hpp"

using namespace rdslab;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("RDSLAB_CLI");
    return p != nullptr ? p : "../tools/rdslab";
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run(const std::string& cmd) {
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("config parsing") {
    auto cfg = Config::parse_string(
        "# comment\n"
        "top = 1\n"
        "[map]\n"
        "kind = pm   # trailing comment\n"
        "alpha = 0.5\n"
        "[run]\n"
        "seed = 42\n"
        "eps_list = 0.04, 0.02 0.01\n");
    CHECK(cfg.get("top") == "1");
    CHECK(cfg.get("map.kind") == "pm");
    CHECK(cfg.get_double("map.alpha") == 0.5);
    CHECK(cfg.get_u64("run.seed") == 42);
    auto l = cfg.get_double_list("run.eps_list");
    REQUIRE(l.size() == 3);
    CHECK(l[1] == 0.02);
    CHECK(cfg.get_or("missing", "x") == "x");
    CHECK_THROWS_AS(cfg.get("missing"), config_error);
    CHECK_THROWS_AS(Config::parse_string("no equals sign"), config_error);
}

TEST_CASE("manifest echoes its configuration and is reloadable") {
    fs::path dir = fs::temp_directory_path() / "rdslab_io_test";
    fs::create_directories(dir);
    std::vector<std::pair<std::string, std::string>> man = {
        {"manifest_version", "1"},
        {"command", "tail"},
        {"config.map.kind", "pm"},
        {"config.run.seed", "7"},
    };
    auto path = (dir / "manifest.txt").string();
    write_manifest(path, man);
    auto cfg = Config::parse_file(path);
    CHECK(cfg.get("map.kind") == "pm");
    CHECK(cfg.get_u64("run.seed") == 7);
    CHECK(!cfg.has("manifest_version"));
    fs::remove_all(dir);
}

TEST_CASE("csv output is deterministic") {
    fs::path dir = fs::temp_directory_path() / "rdslab_io_test2";
    fs::create_directories(dir);
    std::vector<std::vector<std::string>> rows = {
        {"1", format_double(0.1234567890123456789), format_double(1e-300)},
        {"2", format_double(2.0 / 3.0), format_double(-0.0)},
    };
    auto a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    write_csv(a, {"i", "x", "y"}, rows);
    write_csv(b, {"i", "x", "y"}, rows);
    CHECK(slurp(a) == slurp(b));
    // round-trip precision: %.17g reproduces the double exactly
    CHECK(std::stod(format_double(2.0 / 3.0)) == 2.0 / 3.0);
    fs::remove_all(dir);
}

TEST_CASE("density binary round trip") {
    auto g = Grid::graded(64, {0.0});
    Density d = Density::uniform(g);
    for (int i = 0; i < g.size(); ++i) d.values[i] = 1.0 + 0.01 * i;
    d.normalize();
    fs::path dir = fs::temp_directory_path() / "rdslab_io_test3";
    fs::create_directories(dir);
    auto path = (dir / "d.bin").string();
    write_density_binary(path, d, 0.015);
    double eps = 0.0;
    auto back = read_density_binary(path, &eps);
    CHECK(eps == 0.015);
    REQUIRE(back.grid.size() == g.size());
    for (int i = 0; i < g.size(); ++i) {
        REQUIRE(back.grid.cell_lo(i) == g.cell_lo(i));
        REQUIRE(back.values[i] == d.values[i]);
    }
    fs::remove_all(dir);
}

TEST_CASE("cli: validate-map exit codes") {
    fs::path dir = fs::temp_directory_path() / "rdslab_cli_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "good.cfg");
        out << "[map]\nkind = pm\nalpha = 0.5\n";
    }
    CHECK(run(cli_path() + " validate-map --config " + (dir / "good.cfg").string() +
              " --out " + (dir / "g").string()) == 0);

    // a decreasing custom branch fails class validation -> exit 1
    {
        std::ofstream out(dir / "bad_map.txt");
        out << "kind = custom\nalpha = 0.5\n"
            << "branch = 0.0 0.5 left 0.0 -0.5 0.0 0.5 0.0\n"
            << "branch = 0.5 1.0 left -0.25 2.5 0.0 0.5 0.0\n";
        std::ofstream cfg(dir / "bad.cfg");
        cfg << "[map]\nfile = " << (dir / "bad_map.txt").string() << "\n";
    }
    CHECK(run(cli_path() + " validate-map --config " + (dir / "bad.cfg").string() +
              " --out " + (dir / "b").string()) == 1);

    // missing config file -> exit 2
    CHECK(run(cli_path() + " validate-map --config " + (dir / "nope.cfg").string()) == 2);
    fs::remove_all(dir);
}

TEST_CASE("cli: seed discipline and manifest rerun") {
    fs::path dir = fs::temp_directory_path() / "rdslab_cli_test2";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "tail.cfg");
        out << "[map]\nkind = pm\nalpha = 0.5\n"
            << "[tail]\nkind = escape\neps = 0.001\nsamples = 20000\nm_max = 128\n"
            << "[run]\nthreads = 2\n";
    }
    // no seed anywhere: refused with a config error
    CHECK(run(cli_path() + " tail --config " + (dir / "tail.cfg").string() + " --out " +
              (dir / "r0").string() + " >/dev/null 2>&1") == 2);

    // seeded run, serial vs parallel: byte-identical CSV
    CHECK(run(cli_path() + " tail --config " + (dir / "tail.cfg").string() +
              " --seed 11 --threads 1 --out " + (dir / "r1").string() +
              " >/dev/null") == 0);
    CHECK(run(cli_path() + " tail --config " + (dir / "tail.cfg").string() +
              " --seed 11 --threads 4 --out " + (dir / "r2").string() +
              " >/dev/null") == 0);
    CHECK(slurp(dir / "r1" / "tail.csv") == slurp(dir / "r2" / "tail.csv"));

    // rerun straight from the manifest: byte-identical again
    CHECK(run(cli_path() + " tail --config " + (dir / "r1" / "manifest.txt").string() +
              " --out " + (dir / "r3").string() + " >/dev/null") == 0);
    CHECK(slurp(dir / "r1" / "tail.csv") == slurp(dir / "r3" / "tail.csv"));

    // svg exists and has polyline content
    auto svg = slurp(dir / "r1" / "tail.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli: ulam stationary on the doubling map is uniform") {
    fs::path dir = fs::temp_directory_path() / "rdslab_cli_test3";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "ulam.cfg");
        out << "[map]\nkind = doubling\n[ulam]\ngrid = 64\ngraded = false\neps = 0\n";
    }
    CHECK(run(cli_path() + " ulam --config " + (dir / "ulam.cfg").string() + " --out " +
              (dir / "u").string() + " >/dev/null") == 0);
    std::ifstream in(dir / "u" / "stationary.csv");
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "cell_lo,cell_hi,value");
    int count = 0;
    while (std::getline(in, line)) {
        auto p1 = line.find(','), p2 = line.rfind(',');
        double v = std::stod(line.substr(p2 + 1));
        CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
        ++count;
    }
    CHECK(count == 64);
    fs::remove_all(dir);
}
