// tdfreq command-line runner.
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tdfreq/config.hpp"
#include "tdfreq/experiments.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 1;
};

tdfreq::ExperimentConfig load(const Common& c) {
    tdfreq::ExperimentConfig cfg = c.config.empty() ? tdfreq::ExperimentConfig{} : tdfreq::load_config(c.config);
    // --seed drives the system and the input; the input uses seed + 1 so the two streams differ
    if (c.seed) {
        cfg.system.seed = *c.seed;
        cfg.trajectory.input_seed = *c.seed + 1;
    }
    if (!c.out.empty()) cfg.output.dir = c.out;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* sub, Common& c, bool threads) {
    sub->add_option("--config", c.config, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "override system.seed (input seed becomes seed + 1)");
    sub->add_option("--out", c.out, "override output.dir");
    if (threads) sub->add_option("--threads", c.threads, "worker threads for recovery")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Frequency response recovery from time-domain data"};
    app.require_subcommand(1);

    Common gen, sim, rec, rom, ev;
    add_common(app.add_subcommand("generate", "write the configured system as JSON"), gen, false);
    add_common(app.add_subcommand("simulate", "simulate the configured system and write the trajectory CSV"), sim, false);
    add_common(app.add_subcommand("recover", "recover H (and H') on the configured frequency grid"), rec, true);
    add_common(app.add_subcommand("rom", "build a reduced model from recovered data"), rom, true);
    add_common(app.add_subcommand("eval", "sweep a system or ROM file over the unit circle"), ev, false);

    auto* repro = app.add_subcommand("repro", "run a reproduction experiment");
    std::string experiment;
    tdfreq::ReproOptions ro;
    std::string repro_out = ro.out.string();
    repro->add_option("experiment", experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember(tdfreq::repro_names()));
    repro->add_option("--seed", ro.seed, "random seed");
    repro->add_option("--out", repro_out, "report root directory");
    repro->add_flag("--full", ro.full, "full-size experiments (n=1000 synthetic, 140 Penzl frequencies)");
    repro->add_option("--threads", ro.threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::filesystem::path written;
        if (app.got_subcommand("generate")) written = tdfreq::cmd_generate(load(gen));
        if (app.got_subcommand("simulate")) written = tdfreq::cmd_simulate(load(sim));
        if (app.got_subcommand("recover")) written = tdfreq::cmd_recover(load(rec), rec.threads);
        if (app.got_subcommand("rom")) written = tdfreq::cmd_rom(load(rom), rom.threads);
        if (app.got_subcommand("eval")) written = tdfreq::cmd_eval(load(ev));
        if (app.got_subcommand("repro")) {
            ro.out = repro_out;
            tdfreq::ReproReport rep = tdfreq::cmd_repro(experiment, ro);
            std::cout << rep.name << ": " << (rep.pass ? "PASS" : "FAIL") << " (" << rep.dir.string() << ")\n";
            return 0;
        }
        std::cout << written.string() << "\n";
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
