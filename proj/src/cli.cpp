#include "flowtune/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "flowtune/evalsuite.hpp"
#include "flowtune/kbstore.hpp"
#include "flowtune/logio.hpp"
#include "flowtune/netsim.hpp"
#include "flowtune/scenario.hpp"

namespace flowtune::cli {

namespace {

int input_error(const std::string& message) {
    std::cerr << "error: " << message << "\n";
    return kUsageError;
}

} // namespace

int cmd_simgen(const std::string& scenario_path, const std::string& out_path,
               std::uint64_t seed_override) {
    Scenario scenario;
    try {
        scenario = load_scenario(scenario_path);
    } catch (const FormatError& e) {
        return input_error(e.what());
    }
    if (!scenario.design) return input_error("scenario has no 'design' section");
    if (seed_override != 0) scenario.sim.seed = seed_override;

    const auto log = generate_log(scenario.sim, *scenario.design);
    emit_log(log, out_path);
    std::cout << log.size() << " rows -> " << out_path << "\n";
    return kOk;
}

int cmd_offline(const OfflineArgs& args) {
    ParseResult parsed;
    try {
        parsed = parse_log(args.log_path);
    } catch (const FormatError& e) {
        return input_error(e.what());
    }
    for (const auto& rej : parsed.rejects)
        std::cerr << "reject line " << rej.line << ": " << rej.reason << "\n";
    if (parsed.records.empty()) return input_error("no valid records in " + args.log_path);

    BuildDiagnostics diag;
    KnowledgeBase kb = build_kb(parsed.records, args.config, &diag);
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";

    if (!args.merge_with.empty()) {
        KnowledgeBase prior;
        try {
            prior = load_kb(args.merge_with);
        } catch (const FormatError& e) {
            return input_error(e.what());
        }
        kb = merge_kb(prior, kb);
    }
    save_kb(kb, args.out_path);

    std::cout << "clusters=" << kb.entries.size() << " (selected m=" << diag.m
              << ", ch=" << diag.ch_score << ")\n";
    for (const auto& e : kb.entries) {
        std::cout << "cluster " << e.cluster_id << ": size=" << e.size
                  << " surfaces=" << e.surfaces.size();
        if (!e.surfaces.empty()) {
            const auto& top = e.surfaces.front();
            std::cout << " argmax=(cc=" << top.maxima.global.at.cc
                      << ",p=" << top.maxima.global.at.p << ",pp=" << top.maxima.global.at.pp
                      << ") predicted=" << top.maxima.global.value << " Mbps @ intensity "
                      << top.intensity;
        }
        std::cout << "\n";
    }
    std::cout << "saved " << args.out_path << " (fingerprint " << kb.fingerprint() << ")\n";
    return kOk;
}

int cmd_online(const OnlineArgs& args) {
    KnowledgeBase kb;
    Scenario scenario;
    try {
        kb = load_kb(args.kb_path);
        scenario = load_scenario(args.scenario_path);
    } catch (const FormatError& e) {
        return input_error(e.what());
    }
    if (!scenario.request) return input_error("scenario has no 'request' section");
    if (args.seed != 0) scenario.sim.seed = args.seed;

    SimNetwork net(scenario.sim);
    TransferReport report;
    if (args.tuner == "asm") {
        report = run_transfer(*scenario.request, kb, net, args.config);
    } else if (args.tuner == "static") {
        try {
            report = baseline_static(*scenario.request, args.static_theta, net);
        } catch (const std::invalid_argument& e) {
            return input_error(e.what());
        }
    } else if (args.tuner == "additive") {
        report = baseline_additive(*scenario.request, net, args.config);
    } else {
        return input_error("unknown tuner '" + args.tuner + "' (asm | static | additive)");
    }

    write_report(report, args.out_path);
    std::cout << args.tuner << ": " << report.mean_throughput_mbps << " Mbps over "
              << report.wall_seconds << " s";
    if (report.has_prediction) std::cout << ", accuracy " << report.accuracy_pct << "%";
    std::cout << " -> " << args.out_path << "\n";
    return kOk;
}

int cmd_eval(const std::string& suite, const std::string& out_dir, std::uint64_t seed) {
    std::vector<SuiteFile> files;
    try {
        files = run_suite(suite, seed);
    } catch (const std::invalid_argument&) {
        std::string names;
        for (const auto& n : suite_names()) names += " " + n;
        return input_error("unknown suite '" + suite + "'; available:" + names);
    }
    std::filesystem::create_directories(out_dir);
    for (const auto& f : files) {
        const std::string path = out_dir + "/" + f.name;
        std::ofstream out(path, std::ios::binary);
        if (!out) return input_error("cannot write " + path);
        out << f.content;
        std::cout << "wrote " << path << "\n";
    }
    return kOk;
}

} // namespace flowtune::cli
