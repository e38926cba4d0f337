#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "tdfreq/config.hpp"
#include "tdfreq/experiments.hpp"
#include "tdfreq/io.hpp"
#include "tdfreq/metrics.hpp"

using namespace tdfreq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "tdfreq_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool contains(const std::string& text, const std::string& piece) { return text.find(piece) != std::string::npos; }

std::string error_of(const std::string& cfg) {
    try {
        parse_config(cfg);
    } catch (const std::invalid_argument& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("io") {
    TEST_CASE("trajectory CSV round trip is bitwise") {
        StateSpaceSystem sys = random_stable_system(4, 2);
        TimeSeries ts = simulate(sys, gaussian_input(50, 3));
        std::stringstream ss;
        io::write_timeseries_csv(ss, ts);
        TimeSeries back = io::read_timeseries_csv(ss);
        CHECK(back.u == ts.u);
        CHECK(back.y == ts.y);
    }

    TEST_CASE("malformed trajectory CSV") {
        std::istringstream bad_header("a,b\n1,2\n");
        CHECK_THROWS_AS(io::read_timeseries_csv(bad_header), std::invalid_argument);
        std::istringstream bad_row("k,u,y\n0,1.0\n");
        CHECK_THROWS_AS(io::read_timeseries_csv(bad_row), std::invalid_argument);
    }

    TEST_CASE("system JSON round trip") {
        StateSpaceSystem sys = random_stable_system(5, 9);
        StateSpaceSystem back = io::system_from_json(io::system_to_json(sys));
        CHECK(back.A() == sys.A());
        CHECK(back.b() == sys.b());
        CHECK(back.c() == sys.c());
        CHECK_THROWS_AS(io::system_from_json("{\"n\": 2, \"A\": [[1]], \"b\": [1,1], \"c\": [1,1]}"), std::invalid_argument);
        CHECK_THROWS_AS(io::system_from_json("not json"), std::invalid_argument);
    }

    TEST_CASE("ROM JSON round trip") {
        DescriptorROM rom = to_descriptor(random_stable_system(3, 4), 0.5);
        DescriptorROM back = io::rom_from_json(io::rom_to_json(rom));
        CHECK(back.E == rom.E);
        CHECK(back.A == rom.A);
        CHECK(back.b == rom.b);
        CHECK(back.c == rom.c);
    }

    TEST_CASE("recovery JSON round trip") {
        StateSpaceSystem sys = random_stable_system(5, 11);
        TimeSeries ts = simulate(sys, gaussian_input(100, 12));
        std::vector<cplx> sigmas = unit_circle({0.1, 1.0, 2.0});
        sigmas.push_back(cplx(0.5, 0.0));
        RecoveryOptions ro;
        ro.want_deriv = true;
        auto res = recover(ts, sigmas, 5, make_window_plan(ts.T(), 5, PlanOptions{}), ro);
        res[1].informative = false;
        res[1].sW0 = std::numeric_limits<double>::infinity();
        res[1].M1.reset();
        res[1].sW1.reset();
        auto back = io::recovery_from_json(io::recovery_to_json(res));
        REQUIRE(back.size() == res.size());
        for (std::size_t i = 0; i < res.size(); ++i) {
            CHECK(back[i].sigma == res[i].sigma);
            CHECK(back[i].M0 == res[i].M0);
            CHECK(back[i].M1 == res[i].M1);
            CHECK(back[i].sW0 == res[i].sW0);
            CHECK(back[i].informative == res[i].informative);
            CHECK(back[i].kept == res[i].kept);
        }
    }
}

TEST_SUITE("config") {
    TEST_CASE("parse a full config") {
        ExperimentConfig c = parse_config(R"(
# comment
[system]
kind = heat
n = 40
dt = 0.01

[trajectory]
T = 500
input_seed = 4   # trailing comment

[recovery]
count = 30
omega_min = 1e-4
n_used = auto
K = 25

[rom]
method = vf
r = 6
vf_weights = indicator

[output]
dir = "results"
)");
        CHECK(c.system.kind == "heat");
        CHECK(c.system.n == 40);
        CHECK(c.trajectory.T == 500);
        CHECK(c.trajectory.input_seed == 4);
        CHECK(c.recovery.count == 30);
        CHECK(c.recovery.omega_min == 1e-4);
        CHECK_FALSE(c.recovery.n_used.has_value());
        CHECK(c.recovery.K == 25);
        CHECK(c.rom.method == "vf");
        CHECK(*c.rom.r == 6);
        CHECK(c.output.dir == fs::path("results"));
    }

    TEST_CASE("defaults validate") {
        ExperimentConfig c;
        CHECK_NOTHROW(c.validate());
        CHECK(parse_config("").recovery.tau1 == 1e-10);
    }

    TEST_CASE("unknown keys and sections are rejected with the line number") {
        std::string e = error_of("[system]\nn = 5\nfoo = 1\n");
        CHECK(contains(e, "line 3"));
        CHECK(contains(e, "foo"));
        e = error_of("[systems]\n");
        CHECK(contains(e, "line 1"));
        CHECK(contains(e, "systems"));
        CHECK(contains(error_of("n = 5\n"), "before any section"));
        CHECK(contains(error_of("[system]\nn 5\n"), "key = value"));
        CHECK(contains(error_of("[system\n"), "unterminated"));
    }

    TEST_CASE("bad values are rejected") {
        CHECK(contains(error_of("[system]\nn = five\n"), "line 2"));
        CHECK_FALSE(error_of("[system]\nkind = bogus\n").empty());
        CHECK_FALSE(error_of("[recovery]\ncount = 0\n").empty());
        CHECK_FALSE(error_of("[recovery]\nomega_min = 2\nomega_max = 1\n").empty());
        CHECK_FALSE(error_of("[recovery]\nW = 30\nK = 20\n").empty());
        CHECK_FALSE(error_of("[recovery]\nmin_informative = 1.5\n").empty());
        CHECK_FALSE(error_of("[rom]\nmethod = pade\n").empty());
        CHECK_THROWS_AS(load_config("/nonexistent/dir/cfg.toml"), std::invalid_argument);
    }
}

TEST_SUITE("cli") {
    TEST_CASE("simulate then recover from file matches the in-memory run bitwise") {
        fs::path dir = scratch("roundtrip");
        ExperimentConfig cfg;
        cfg.system.n = 6;
        cfg.system.seed = 21;
        cfg.trajectory.T = 150;
        cfg.trajectory.input_seed = 22;
        cfg.recovery.n_used = 6;
        cfg.output.dir = dir;
        fs::path traj = cmd_simulate(cfg);
        CHECK(fs::exists(traj));

        ExperimentConfig from_file = cfg;
        from_file.trajectory.input = "file";
        from_file.trajectory.file = traj;
        from_file.output.recovery = "from_file";
        fs::path rec = cmd_recover(from_file, 1);
        auto disk = io::read_recovery(rec);

        StateSpaceSystem sys = make_system(cfg.system);
        TimeSeries ts = make_trajectory(sys, cfg.trajectory);
        RecoveryRun mem = run_recovery(ts, unit_circle(frequency_grid(cfg.recovery)), cfg.recovery, 1);
        REQUIRE(disk.size() == mem.results.size());
        for (std::size_t i = 0; i < disk.size(); ++i) {
            CHECK(disk[i].M0 == mem.results[i].M0);
            CHECK(disk[i].M1 == mem.results[i].M1);
            CHECK(disk[i].sW0 == mem.results[i].sW0);
        }
    }

    TEST_CASE("recover output does not depend on the thread count") {
        fs::path dir = scratch("threads");
        ExperimentConfig cfg;
        cfg.system.n = 8;
        cfg.trajectory.T = 200;
        cfg.output.dir = dir;
        cfg.output.recovery = "one";
        std::string a = slurp(cmd_recover(cfg, 1));
        cfg.output.recovery = "four";
        std::string b = slurp(cmd_recover(cfg, 4));
        CHECK(a == b);
    }

    TEST_CASE("generate, rom and eval") {
        fs::path dir = scratch("chain");
        ExperimentConfig cfg;
        cfg.system.n = 6;
        cfg.trajectory.T = 200;
        cfg.recovery.count = 12;
        cfg.recovery.n_used = 6;
        cfg.recovery.spacing = "linear";
        cfg.recovery.omega_min = 0.1;
        cfg.rom.r = 6;
        cfg.output.dir = dir;
        fs::path sys_path = cmd_generate(cfg);
        StateSpaceSystem sys = io::read_system(sys_path);
        CHECK(sys.order() == 6);
        fs::path rom_path = cmd_rom(cfg, 1);
        DescriptorROM rom = io::read_rom(rom_path);
        double err = relative_hinf_error([&](cplx z) { return eval_tf(sys, z); }, [&](cplx z) { return eval_rom(rom, z); });
        CHECK(err < 1e-6);
        cfg.output.eval_file = rom_path;
        cfg.output.sweep = "rom_sweep.csv";
        CHECK(fs::exists(cmd_eval(cfg)));
    }

    TEST_CASE("repro conditioning is byte-for-byte deterministic") {
        ReproOptions o;
        o.out = scratch("repro_a");
        ReproReport a = cmd_repro("conditioning", o);
        o.out = scratch("repro_b");
        ReproReport b = cmd_repro("conditioning", o);
        CHECK(a.pass);
        for (const char* f : {"sv_G_z.csv", "sv_Uc_z.csv", "sv_U_z.csv", "summary.json"}) {
            CHECK(fs::exists(a.dir / f));
            CHECK(slurp(a.dir / f) == slurp(b.dir / f));
        }
        CHECK_THROWS_AS(cmd_repro("nonsense", o), std::invalid_argument);
    }
}
