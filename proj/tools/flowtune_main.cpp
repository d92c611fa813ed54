#include <iostream>

#include <CLI11.hpp>

#include "flowtune/cli.hpp"

using namespace flowtune;

int main(int argc, char** argv) {
    CLI::App app{"flowtune: offline knowledge discovery and online adaptive tuning "
                 "for simulated bulk transfers"};
    app.require_subcommand(1);

    std::string scenario_path, log_path, kb_path, out_path, merge_path;
    std::uint64_t seed = 0;

    cli::OfflineArgs offline;
    cli::OnlineArgs online;
    std::string suite;

    auto* simgen = app.add_subcommand("simgen", "generate a synthetic transfer log");
    simgen->add_option("--scenario", scenario_path, "scenario file (needs 'design')")->required();
    simgen->add_option("--out", out_path, "output log CSV")->required();
    simgen->add_option("--seed", seed, "override scenario seed");

    auto* off = app.add_subcommand("offline", "build a knowledge base from a transfer log");
    off->add_option("--logs", offline.log_path, "input log CSV")->required();
    off->add_option("--out", offline.out_path, "output knowledge base")->required();
    off->add_option("--merge", offline.merge_with, "merge into this prior knowledge base");
    off->add_option("--seed", offline.config.seed, "offline analysis seed");
    off->add_option("--z", offline.config.z, "confidence multiplier");
    off->add_option("--beta", offline.config.caps.beta, "parameter upper bound");
    off->add_option("--max-streams", offline.config.caps.max_streams, "cc*p cap");
    off->add_option("--max-pipelining", offline.config.caps.max_pipelining, "pp cap");

    auto* on = app.add_subcommand("online", "run one tuned transfer against the simulator");
    on->add_option("--kb", online.kb_path, "knowledge base file")->required();
    on->add_option("--scenario", online.scenario_path, "scenario file (needs 'request')")
        ->required();
    on->add_option("--tuner", online.tuner, "asm | static | additive");
    on->add_option("--out", online.out_path, "output report path")->required();
    on->add_option("--seed", online.seed, "override scenario seed");
    on->add_option("--sample-fraction", online.config.sample_fraction, "probe chunk fraction");
    on->add_option("--max-samples", online.config.max_samples, "probe budget");
    on->add_option("--cc", online.static_theta.cc, "static tuner concurrency");
    on->add_option("--p", online.static_theta.p, "static tuner parallelism");
    on->add_option("--pp", online.static_theta.pp, "static tuner pipelining");

    auto* ev = app.add_subcommand("eval", "run a named evaluation suite");
    ev->add_option("--suite", suite, "throughput | convergence | fairness | staleness")
        ->required();
    ev->add_option("--out", out_path, "output directory")->required();
    ev->add_option("--seed", seed, "evaluation seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kUsageError;
    }

    try {
        if (simgen->parsed()) return cli::cmd_simgen(scenario_path, out_path, seed);
        if (off->parsed()) return cli::cmd_offline(offline);
        if (on->parsed()) return cli::cmd_online(online);
        if (ev->parsed()) return cli::cmd_eval(suite, out_path, seed == 0 ? 1 : seed);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return cli::kInternalError;
    }
    return cli::kUsageError;
}
