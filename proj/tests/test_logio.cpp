#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "flowtune/logio.hpp"
#include "flowtune/netsim.hpp"
#include "flowtune/rng.hpp"

using namespace flowtune;

namespace {

TransferRecord sample_record(int i) {
    TransferRecord r;
    r.id = "r-" + std::to_string(i);
    r.src_endpoint = "alpha";
    r.dst_endpoint = "beta";
    r.start_time = 100.0 * i;
    r.end_time = 100.0 * i + 50;
    r.rtt = 10.5;
    r.bandwidth = 1000;
    r.avg_file_size = 1e6 + i;
    r.num_files = 10 + i;
    r.total_size = r.avg_file_size * static_cast<double>(r.num_files);
    r.cc = 1 + i % 4;
    r.p = 1 + i % 3;
    r.pp = 1 + i % 5;
    r.throughput = 500 + 0.1 * i;
    return r;
}

ParseResult parse_text(const std::string& text, const ColumnMap& schema = {}) {
    std::istringstream in(text);
    return parse_log_stream(in, schema);
}

} // namespace

TEST_CASE("emit of an empty list is a header-only file") {
    CHECK(format_log({}) == std::string(kLogHeader) + "\n");
}

TEST_CASE("one record makes a two-line file") {
    const std::string text = format_log({sample_record(0)});
    CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}

TEST_CASE("three valid rows parse with no rejects") {
    const auto res = parse_text(format_log({sample_record(0), sample_record(1), sample_record(2)}));
    CHECK(res.records.size() == 3);
    CHECK(res.rejects.empty());
}

TEST_CASE("rows violating record invariants are rejected with a reason") {
    auto good = sample_record(0);
    auto too_fast = sample_record(1);
    too_fast.throughput = too_fast.bandwidth + 1;
    auto backwards = sample_record(2);
    backwards.end_time = backwards.start_time - 1;

    std::ostringstream text;
    text << kLogHeader << '\n';
    auto raw_row = [](const TransferRecord& r) {
        return format_log({r}).substr(std::string(kLogHeader).size() + 1);
    };
    text << raw_row(good) << raw_row(too_fast) << raw_row(backwards);

    const auto res = parse_text(text.str());
    CHECK(res.records.size() == 1);
    REQUIRE(res.rejects.size() == 2);
    CHECK(res.rejects[0].reason == "throughput exceeds capacity");
    CHECK(res.rejects[0].line == 3);
    CHECK(res.rejects[1].reason == "end_time not after start_time");
}

TEST_CASE("unparseable numerics reject the row without aborting the file") {
    std::string text = std::string(kLogHeader) + "\n";
    text += "a,alpha,beta,0,50,10,1000,1e6,xx,1e7,1,1,1,500\n";
    text += format_log({sample_record(1)}).substr(std::string(kLogHeader).size() + 1);
    const auto res = parse_text(text);
    CHECK(res.records.size() == 1);
    REQUIRE(res.rejects.size() == 1);
    CHECK(res.rejects[0].reason.find("num_files") != std::string::npos);
}

TEST_CASE("missing required column is a schema error") {
    CHECK_THROWS_AS(parse_text("id,src,dst\n"), FormatError);
    CHECK_THROWS_WITH(parse_text("id,src,dst\n"),
                      doctest::Contains("missing required column"));
}

TEST_CASE("column map renames headers") {
    std::string text = "ID,Source,Dest,start_time,end_time,rtt_ms,bandwidth_mbps,"
                       "avg_file_size_bytes,num_files,total_size_bytes,cc,p,pp,throughput_mbps\n";
    text += "x,alpha,beta,0,50,10,1000,1000000,10,10000000,1,1,1,500\n";
    ColumnMap schema{{"id", "ID"}, {"src", "Source"}, {"dst", "Dest"}};
    const auto res = parse_text(text, schema);
    CHECK(res.records.size() == 1);
    CHECK(res.records[0].src_endpoint == "alpha");
}

TEST_CASE("round-trip is exact on a simulator-generated 500-row log") {
    SimConfig cfg;
    cfg.bandwidth = 1000;
    cfg.rtt = 12.25;
    cfg.noise_sigma = 0.05;
    cfg.seed = 99;
    LogDesign d;
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        DesignCell cell;
        cell.theta = {1 + static_cast<int>(rng.uniform_index(8)),
                      1 + static_cast<int>(rng.uniform_index(8)),
                      1 + static_cast<int>(rng.uniform_index(8))};
        cell.load = 0;
        cell.reps = 1;
        d.cells.push_back(cell);
    }
    const auto log = generate_log(cfg, d);
    REQUIRE(log.size() == 500);

    const std::string text = format_log(log);
    const auto back = parse_text(text);
    CHECK(back.rejects.empty());
    REQUIRE(back.records.size() == log.size());
    for (std::size_t i = 0; i < log.size(); ++i) CHECK(back.records[i] == log[i]);
    // canonical formatting: a second emit is byte-identical
    CHECK(format_log(back.records) == text);
}

TEST_CASE("round-trip is exact on ten thousand randomized records") {
    Rng rng(17);
    std::vector<TransferRecord> records;
    for (int i = 0; i < 10000; ++i) {
        TransferRecord r = sample_record(i);
        r.rtt = rng.uniform(0.1, 200);
        r.bandwidth = rng.uniform(100, 10000);
        r.throughput = rng.uniform(0, r.bandwidth);
        r.avg_file_size = rng.uniform(1, 1e12);
        r.total_size = r.avg_file_size * static_cast<double>(r.num_files) *
                       rng.uniform(0.7, 1.3);
        records.push_back(std::move(r));
    }
    const std::string text = format_log(records);
    const auto back = parse_text(text);
    CHECK(back.rejects.empty());
    REQUIRE(back.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) CHECK(back.records[i] == records[i]);
}

TEST_CASE("shortest round-trip decimals") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1e6) == "1e+06");
    CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
    for (double v : {0.1, 1.0 / 3.0, 12345.6789, 1e-300}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}

TEST_CASE("file errors") {
    CHECK_THROWS_AS(parse_log("/nonexistent/path.csv"), FormatError);
    CHECK_THROWS_AS(emit_log({}, "/nonexistent/dir/file.csv"), FormatError);
}
