#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "flowtune/cli.hpp"
#include "flowtune/kbstore.hpp"
#include "flowtune/logio.hpp"

using namespace flowtune;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() / "flowtune_cli_test";
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kScenario = R"({
  "sim": {
    "bandwidth_mbps": 1000, "rtt_ms": 10,
    "beta": 6, "max_streams": 36, "max_pipelining": 6,
    "noise_sigma": 0.03, "seed": 7,
    "load_timeline": [[0.0, 0.2]]
  },
  "request": {"src": "src-host", "dst": "dst-host",
              "files": {"count": 60, "size_bytes": 2e8}},
  "design": {"loads": [0.0, 0.2, 0.4], "reps": 3,
             "avg_file_size_bytes": 2e8, "num_files": 60}
})";

} // namespace

TEST_CASE("simgen writes a parsable log and is byte-stable under one seed") {
    TempDir tmp;
    write_file(tmp.file("scenario.json"), kScenario);
    CHECK(cli::cmd_simgen(tmp.file("scenario.json"), tmp.file("log.csv")) == cli::kOk);
    const auto parsed = parse_log(tmp.file("log.csv"));
    CHECK(parsed.records.size() > 0);
    CHECK(parsed.rejects.empty());

    CHECK(cli::cmd_simgen(tmp.file("scenario.json"), tmp.file("log2.csv")) == cli::kOk);
    CHECK(read_file(tmp.file("log.csv")) == read_file(tmp.file("log2.csv")));
}

TEST_CASE("simgen rejects broken scenarios with exit code 2") {
    TempDir tmp;
    write_file(tmp.file("bad.json"), "{ not json");
    CHECK(cli::cmd_simgen(tmp.file("bad.json"), tmp.file("log.csv")) == cli::kUsageError);
    CHECK(cli::cmd_simgen(tmp.file("missing.json"), tmp.file("log.csv")) == cli::kUsageError);
    write_file(tmp.file("nodesign.json"), R"({"sim": {"bandwidth_mbps": 100}})");
    CHECK(cli::cmd_simgen(tmp.file("nodesign.json"), tmp.file("log.csv")) == cli::kUsageError);
}

TEST_CASE("offline builds a loadable knowledge base and online tunes against it") {
    TempDir tmp;
    write_file(tmp.file("scenario.json"), kScenario);
    REQUIRE(cli::cmd_simgen(tmp.file("scenario.json"), tmp.file("log.csv")) == cli::kOk);

    cli::OfflineArgs off;
    off.log_path = tmp.file("log.csv");
    off.out_path = tmp.file("kb.json");
    off.config.caps = {6, 36, 6};
    off.config.seed = 3;
    REQUIRE(cli::cmd_offline(off) == cli::kOk);
    const KnowledgeBase kb = load_kb(tmp.file("kb.json"));
    CHECK(kb.entries.size() == 1);
    CHECK(kb.entries[0].surfaces.size() == 3);

    cli::OnlineArgs on;
    on.kb_path = tmp.file("kb.json");
    on.scenario_path = tmp.file("scenario.json");
    on.out_path = tmp.file("report.json");
    on.tuner = "asm";
    REQUIRE(cli::cmd_online(on) == cli::kOk);

    const auto report = nlohmann::json::parse(read_file(tmp.file("report.json")));
    CHECK(report.at("samples_used").get<int>() <= 3);
    CHECK(report.at("accuracy_pct").get<double>() > 0);

    // determinism: the same invocation reproduces the report byte for byte
    on.out_path = tmp.file("report2.json");
    REQUIRE(cli::cmd_online(on) == cli::kOk);
    CHECK(read_file(tmp.file("report.json")) == read_file(tmp.file("report2.json")));
}

TEST_CASE("offline refuses empty or unreadable logs") {
    TempDir tmp;
    cli::OfflineArgs off;
    off.log_path = tmp.file("none.csv");
    off.out_path = tmp.file("kb.json");
    CHECK(cli::cmd_offline(off) == cli::kUsageError);

    write_file(tmp.file("empty.csv"), std::string(kLogHeader) + "\n");
    off.log_path = tmp.file("empty.csv");
    CHECK(cli::cmd_offline(off) == cli::kUsageError);
}

TEST_CASE("offline --merge equals a fresh build on the combined log") {
    TempDir tmp;
    // two disjoint-time logs over the same lattice
    const std::string scen_a = R"({
      "sim": {"beta": 4, "max_streams": 16, "max_pipelining": 4, "seed": 11},
      "design": {"loads": [0.0], "reps": 3, "avg_file_size_bytes": 1e6, "num_files": 10}
    })";
    const std::string scen_b = R"({
      "sim": {"beta": 4, "max_streams": 16, "max_pipelining": 4, "rtt_ms": 80, "seed": 12},
      "design": {"loads": [0.0], "reps": 3, "avg_file_size_bytes": 1e9, "num_files": 900,
                 "start_time": 1e6}
    })";
    write_file(tmp.file("a.json"), scen_a);
    write_file(tmp.file("b.json"), scen_b);
    REQUIRE(cli::cmd_simgen(tmp.file("a.json"), tmp.file("a.csv")) == cli::kOk);
    REQUIRE(cli::cmd_simgen(tmp.file("b.json"), tmp.file("b.csv")) == cli::kOk);

    cli::OfflineArgs off;
    off.config.caps = {4, 16, 4};
    off.config.min_cluster_samples = 8;
    FeatureSchema bounds;
    bounds.mins = transfer_features(5, 1000, 1e5, 1);
    bounds.maxs = transfer_features(100, 1000, 1e10, 10000);
    off.config.feature_bounds = bounds;

    off.log_path = tmp.file("a.csv");
    off.out_path = tmp.file("kb_a.json");
    REQUIRE(cli::cmd_offline(off) == cli::kOk);

    off.log_path = tmp.file("b.csv");
    off.out_path = tmp.file("kb_ab.json");
    off.merge_with = tmp.file("kb_a.json");
    REQUIRE(cli::cmd_offline(off) == cli::kOk);

    // fresh build on the concatenated log
    const std::string combined = read_file(tmp.file("a.csv")) +
                                 read_file(tmp.file("b.csv"))
                                     .substr(std::string(kLogHeader).size() + 1);
    write_file(tmp.file("ab.csv"), combined);
    off.log_path = tmp.file("ab.csv");
    off.out_path = tmp.file("kb_fresh.json");
    off.merge_with.clear();
    REQUIRE(cli::cmd_offline(off) == cli::kOk);

    CHECK(read_file(tmp.file("kb_ab.json")) == read_file(tmp.file("kb_fresh.json")));
}

TEST_CASE("online validates tuner names and static caps") {
    TempDir tmp;
    write_file(tmp.file("scenario.json"), kScenario);
    REQUIRE(cli::cmd_simgen(tmp.file("scenario.json"), tmp.file("log.csv")) == cli::kOk);
    cli::OfflineArgs off;
    off.log_path = tmp.file("log.csv");
    off.out_path = tmp.file("kb.json");
    off.config.caps = {6, 36, 6};
    REQUIRE(cli::cmd_offline(off) == cli::kOk);

    cli::OnlineArgs on;
    on.kb_path = tmp.file("kb.json");
    on.scenario_path = tmp.file("scenario.json");
    on.out_path = tmp.file("report.json");

    on.tuner = "nonsense";
    CHECK(cli::cmd_online(on) == cli::kUsageError);

    on.tuner = "static";
    on.static_theta = {6, 6, 1}; // exceeds max_streams = 36
    CHECK(cli::cmd_online(on) == cli::kUsageError);

    on.static_theta = {2, 2, 2};
    CHECK(cli::cmd_online(on) == cli::kOk);

    on.tuner = "additive";
    on.out_path = tmp.file("additive.json");
    CHECK(cli::cmd_online(on) == cli::kOk);
}

TEST_CASE("eval rejects unknown suites") {
    TempDir tmp;
    CHECK(cli::cmd_eval("bogus", tmp.file("out"), 1) == cli::kUsageError);
}
