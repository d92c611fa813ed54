#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "flowtune/types.hpp"

namespace flowtune {

struct LoadPoint {
    double time = 0; // seconds
    double load = 0; // external load fraction in [0, 1]
};

struct SimConfig {
    double bandwidth = 1000; // Mbit/s link capacity
    double rtt = 10;         // milliseconds
    ParameterCaps caps;
    double knee = 6.0;        // stream count at half link saturation
    double pipeline_c0 = 1.0; // scales the per-command latency penalty
    double noise_sigma = 0.03;
    // Amplitude of a fixed per-configuration modulation (end-system effects
    // that repeat for the same parameter choice, unlike the measurement
    // noise). 0 disables it, leaving the plain closed form.
    double systematic_ripple = 0.0;
    std::uint64_t seed = 1;
    // Piecewise-constant, right-continuous external load; empty means idle.
    std::vector<LoadPoint> load_timeline;

    double load_at(double t) const;
};

// Noise-free throughput for one agent: a saturating share of the remaining
// capacity by stream count, times the pipelining efficiency small files pay
// against per-command latency.
//
//   s      = cc * p
//   share  = bandwidth * (1 - load) * s / (s + other_streams + knee)
//   eff    = f_avg / (f_avg + c0 * rtt_ms * bandwidth_mbps * 125 / pp)
//   result = share * eff * (1 + systematic_ripple * w(theta))
//
// (125 converts Mbit/s * ms to bytes, so the denominator adds one
// bandwidth-delay product's worth of bytes per queued command. w is the
// fixed modulation pattern below, identically zero in the default config.)
double mean_throughput(const SimConfig& cfg, const ParameterPoint& theta, double load,
                       double other_streams, double avg_file_size_bytes);

// Fixed configuration-dependent modulation in [-1, 1], the same on every
// evaluation: high-frequency in each parameter so it is not captured by a
// low-order polynomial.
double ripple_pattern(const ParameterPoint& theta);

// Deterministic shared link. Each agent keeps its own clock; a transfer
// integrates the closed form across the load timeline while the other
// agents' registered stream counts contend. Calls are serialized, so outcome
// order is fixed by call order and noise is keyed per (agent, transfer
// index) regardless of interleaving.
class SimNetwork {
public:
    explicit SimNetwork(SimConfig cfg) : cfg_(std::move(cfg)) {}

    int add_agent(std::string name, double avg_file_size_bytes);

    struct Outcome {
        double throughput_mbps = 0;
        double elapsed_s = 0;
    };

    // Transfers `bytes` at the given parameter point; the agent's stream
    // count stays registered (contending with others) until the next call or
    // release().
    Outcome transfer(int agent, const ParameterPoint& theta, double bytes);

    void release(int agent);
    double clock(int agent) const;
    // Streams registered by everyone except `agent`.
    double other_streams(int agent) const;
    const SimConfig& config() const { return cfg_; }

private:
    struct Agent {
        std::string name;
        double avg_file_size = 0;
        double clock = 0;
        int streams = 0;
        std::uint64_t transfers_done = 0;
    };

    mutable std::mutex mutex_;
    SimConfig cfg_;
    std::vector<Agent> agents_;
};

// Measurement plan for synthetic training logs: repeat each parameter point
// under each external load.
struct DesignCell {
    ParameterPoint theta;
    double load = 0;
    int reps = 1;
};

struct LogDesign {
    std::vector<DesignCell> cells;
    double avg_file_size_bytes = 1e9;
    std::int64_t num_files = 100;
    std::string src = "src-host";
    std::string dst = "dst-host";
    double start_time = 0;
    double slot_seconds = 10; // schedule granularity per observation
};

// Every cap-feasible lattice point once per load, `reps` times.
LogDesign full_lattice_design(const ParameterCaps& caps, const std::vector<double>& loads,
                              int reps);

// One record per repetition with seeded noise. Observations under the same
// load share a schedule block overlapped by one synthetic background
// transfer whose rate is load * bandwidth, so contender classification
// recovers the load condition exactly.
std::vector<TransferRecord> generate_log(const SimConfig& cfg, const LogDesign& design);

} // namespace flowtune
