#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "flowtune/knowledge.hpp"
#include "flowtune/netsim.hpp"
#include "flowtune/rng.hpp"

using namespace flowtune;

namespace {

SimConfig idle_gigabit(double noise = 0.0) {
    SimConfig c;
    c.bandwidth = 1000;
    c.rtt = 10;
    c.caps = {8, 64, 8};
    c.knee = 6;
    c.pipeline_c0 = 1.0;
    c.noise_sigma = noise;
    c.seed = 7;
    return c;
}

} // namespace

TEST_CASE("closed form matches the hand-evaluated example") {
    // bandwidth 1000, rtt 10, f_avg 1e9, theta (2,2,1), idle, alone:
    // share = 1000*4/10 = 400, eff = 1e9/(1e9 + 1.25e6)
    const SimConfig cfg = idle_gigabit();
    const double eff = 1e9 / (1e9 + 1.25e6);
    const double expect = 400.0 * eff;
    CHECK(mean_throughput(cfg, {2, 2, 1}, 0.0, 0.0, 1e9) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(399.5).epsilon(1e-3));
}

TEST_CASE("full load gives zero throughput") {
    CHECK(mean_throughput(idle_gigabit(), {4, 4, 4}, 1.0, 0.0, 1e9) == 0.0);
}

TEST_CASE("many streams and huge files approach the free capacity") {
    const SimConfig cfg = idle_gigabit();
    const double th = mean_throughput(cfg, {8, 8, 8}, 0.0, 0.0, 1e15);
    CHECK(th == doctest::Approx(1000.0 * 64 / 70).epsilon(1e-9));
    CHECK(th < cfg.bandwidth);
}

TEST_CASE("closed form is monotone in streams, load, and contention") {
    const SimConfig cfg = idle_gigabit();
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        const int cc = 1 + static_cast<int>(rng.uniform_index(7));
        const int p = 1 + static_cast<int>(rng.uniform_index(7));
        const int pp = 1 + static_cast<int>(rng.uniform_index(8));
        const double load = rng.uniform(0, 0.9);
        const double other = rng.uniform(0, 50);
        const double f = rng.uniform(1e6, 1e10);
        const double base = mean_throughput(cfg, {cc, p, pp}, load, other, f);
        if ((cc + 1) * p <= cfg.caps.max_streams && cc + 1 <= cfg.caps.beta)
            CHECK(mean_throughput(cfg, {cc + 1, p, pp}, load, other, f) >= base);
        CHECK(mean_throughput(cfg, {cc, p, pp}, std::min(1.0, load + 0.05), other, f) <= base);
        CHECK(mean_throughput(cfg, {cc, p, pp}, load, other + 5, f) <= base);
    }
}

TEST_CASE("infeasible points are refused") {
    SimConfig cfg = idle_gigabit();
    cfg.caps = {8, 16, 4};
    CHECK_THROWS_AS(mean_throughput(cfg, {8, 8, 1}, 0, 0, 1e9), std::invalid_argument);
    CHECK_THROWS_AS(mean_throughput(cfg, {1, 1, 5}, 0, 0, 1e9), std::invalid_argument);
    SimNetwork net(cfg);
    const int a = net.add_agent("x", 1e9);
    CHECK_THROWS_AS(net.transfer(a, {8, 8, 1}, 1e6), std::invalid_argument);
    CHECK_THROWS_AS(net.transfer(a, {1, 1, 1}, 0), std::invalid_argument);
}

TEST_CASE("noise-free stationary transfer reproduces the closed form exactly") {
    const SimConfig cfg = idle_gigabit(0.0);
    SimNetwork net(cfg);
    const int a = net.add_agent("solo", 1e9);
    const double rate = mean_throughput(cfg, {2, 2, 1}, 0.0, 0.0, 1e9);
    const auto out = net.transfer(a, {2, 2, 1}, 5e9);
    CHECK(out.throughput_mbps == doctest::Approx(rate).epsilon(1e-12));
    CHECK(out.elapsed_s == doctest::Approx(5e9 / (rate * 125000.0)).epsilon(1e-12));
    CHECK(net.clock(a) == doctest::Approx(out.elapsed_s));
}

TEST_CASE("two identical agents split the shared link") {
    const SimConfig cfg = idle_gigabit(0.0);
    SimNetwork net(cfg);
    const int a = net.add_agent("a", 1e12);
    const int b = net.add_agent("b", 1e12);
    const ParameterPoint theta{4, 4, 8};
    const double s = theta.total_streams();

    // register b's streams by a first (tiny) transfer, then measure a
    net.transfer(b, theta, 1e6);
    const auto out = net.transfer(a, theta, 1e10);
    const double expect = mean_throughput(cfg, theta, 0.0, s, 1e12);
    CHECK(out.throughput_mbps == doctest::Approx(expect).epsilon(1e-9));
    // both shares together stay within the free capacity
    CHECK(2 * expect <= cfg.bandwidth);
}

TEST_CASE("load step integrates piecewise") {
    SimConfig cfg = idle_gigabit(0.0);
    // rate r1 while idle; halves when load steps to 0.5 at t=60
    cfg.load_timeline = {{0.0, 0.0}, {60.0, 0.5}};
    SimNetwork net(cfg);
    const int a = net.add_agent("x", 1e12);
    const ParameterPoint theta{2, 2, 8};
    const double r1 = mean_throughput(cfg, theta, 0.0, 0.0, 1e12);
    const double bytes1 = r1 * 125000.0 * 60; // drained in the first segment
    const double extra = 2e9;
    const auto out = net.transfer(a, theta, bytes1 + extra);
    const double expect_elapsed = 60.0 + extra / (0.5 * r1 * 125000.0);
    CHECK(out.elapsed_s == doctest::Approx(expect_elapsed).epsilon(1e-9));
}

TEST_CASE("a fully loaded link stalls the transfer") {
    SimConfig cfg = idle_gigabit(0.0);
    cfg.load_timeline = {{0.0, 1.0}};
    SimNetwork net(cfg);
    const int a = net.add_agent("x", 1e9);
    CHECK_THROWS_AS(net.transfer(a, {1, 1, 1}, 1e6), std::runtime_error);
}

TEST_CASE("same seed reproduces identical outcomes") {
    for (int run = 0; run < 2; ++run) {
        static std::vector<double> first;
        SimConfig cfg = idle_gigabit(0.05);
        cfg.seed = 424242;
        SimNetwork net(cfg);
        const int a = net.add_agent("x", 1e9);
        std::vector<double> seen;
        for (int i = 0; i < 10; ++i) seen.push_back(net.transfer(a, {2, 3, 4}, 1e8).throughput_mbps);
        if (run == 0) first = seen;
        else CHECK(first == seen);
    }
}

TEST_CASE("allocated shares never exceed the free capacity") {
    SimConfig cfg = idle_gigabit(0.05);
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const double load = rng.uniform(0, 0.8);
        std::vector<double> streams;
        double total = 0;
        const int agents = 2 + static_cast<int>(rng.uniform_index(5));
        for (int i = 0; i < agents; ++i) {
            streams.push_back(1 + static_cast<double>(rng.uniform_index(60)));
            total += streams.back();
        }
        double sum_shares = 0;
        for (double s : streams)
            sum_shares += cfg.bandwidth * (1 - load) * s / (total + cfg.knee);
        CHECK(sum_shares <= cfg.bandwidth * (1 - load) + 1e-9);
        // noisy realizations stay within the 3-sigma envelope
        CHECK(sum_shares * (1 + 3 * cfg.noise_sigma) <=
              cfg.bandwidth * (1 - load) + 3 * cfg.noise_sigma * cfg.bandwidth + 1e-9);
    }
}

TEST_CASE("identical concurrent agents receive equal expected shares") {
    SimConfig cfg = idle_gigabit(0.03);
    SimNetwork net(cfg);
    const int a = net.add_agent("a", 1e10);
    const int b = net.add_agent("b", 1e10);
    // register both stream counts before measuring
    net.transfer(a, {4, 4, 8}, 1e6);
    net.transfer(b, {4, 4, 8}, 1e6);
    double sum_a = 0, sum_b = 0;
    const int reps = 120;
    for (int i = 0; i < reps; ++i) {
        sum_a += net.transfer(a, {4, 4, 8}, 1e8).throughput_mbps;
        sum_b += net.transfer(b, {4, 4, 8}, 1e8).throughput_mbps;
    }
    const double mean_a = sum_a / reps, mean_b = sum_b / reps;
    const double sigma = cfg.noise_sigma * mean_a;
    CHECK(std::abs(mean_a - mean_b) <= 3 * sigma / std::sqrt(static_cast<double>(reps)));
}

TEST_CASE("generated records reproduce the closed form when noise is off") {
    SimConfig cfg = idle_gigabit(0.0);
    LogDesign d;
    d.cells = {{{3, 2, 4}, 0.0, 1}};
    d.avg_file_size_bytes = 5e8;
    const auto log = generate_log(cfg, d);
    REQUIRE(log.size() == 1);
    CHECK(log[0].throughput ==
          doctest::Approx(mean_throughput(cfg, {3, 2, 4}, 0.0, 0.0, 5e8)).epsilon(1e-12));
    CHECK_FALSE(log[0].violation().has_value());
}

TEST_CASE("a full lattice design under one idle load counts reps times the lattice") {
    SimConfig cfg = idle_gigabit(0.03);
    const LogDesign d = full_lattice_design(cfg.caps, {0.0}, 3);
    const auto log = generate_log(cfg, d);
    CHECK(log.size() == 3u * 8 * 8 * 8);
    for (const auto& r : log) CHECK_FALSE(r.violation().has_value());
}

TEST_CASE("contender records let the load condition be recovered from the log") {
    SimConfig cfg = idle_gigabit(0.03);
    const LogDesign d = full_lattice_design(cfg.caps, {0.0, 0.3, 0.6}, 1);
    const auto log = generate_log(cfg, d);

    int checked = 0;
    for (const auto& r : log) {
        if (r.id.rfind("t-", 0) != 0) continue;
        const LoadProfile prof = classify_contenders(r, log);
        // throughput of the primary record reveals which block it is in
        const double implied_load = 1.0 - prof.intensity;
        CHECK((std::abs(implied_load - 0.0) < 0.01 || std::abs(implied_load - 0.3) < 0.01 ||
               std::abs(implied_load - 0.6) < 0.01));
        ++checked;
    }
    CHECK(checked == 3 * 512);
}
