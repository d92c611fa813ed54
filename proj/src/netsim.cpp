#include "flowtune/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "flowtune/rng.hpp"

namespace flowtune {

namespace {
constexpr double kBytesPerMbitSecond = 125000.0; // 1 Mbit/s = 125000 byte/s
}

double SimConfig::load_at(double t) const {
    double load = 0;
    for (const auto& pt : load_timeline) {
        if (pt.time <= t) load = pt.load;
        else break;
    }
    return load;
}

double ripple_pattern(const ParameterPoint& theta) {
    return std::sin(1.9 * theta.cc + 0.7) * std::sin(2.3 * theta.p + 1.1) *
           std::sin(2.9 * theta.pp + 0.5);
}

double mean_throughput(const SimConfig& cfg, const ParameterPoint& theta, double load,
                       double other_streams, double avg_file_size_bytes) {
    if (!theta.feasible(cfg.caps)) throw std::invalid_argument("infeasible parameter point");
    if (load < 0 || load > 1) throw std::invalid_argument("load must be in [0, 1]");
    const double s = static_cast<double>(theta.total_streams());
    const double share = cfg.bandwidth * (1.0 - load) * s / (s + other_streams + cfg.knee);
    const double latency_bytes =
        cfg.pipeline_c0 * cfg.rtt * cfg.bandwidth * 125.0 / static_cast<double>(theta.pp);
    const double eff = avg_file_size_bytes / (avg_file_size_bytes + latency_bytes);
    double th = share * eff;
    if (cfg.systematic_ripple != 0.0)
        th *= 1.0 + cfg.systematic_ripple * ripple_pattern(theta);
    return th;
}

int SimNetwork::add_agent(std::string name, double avg_file_size_bytes) {
    std::lock_guard<std::mutex> lock(mutex_);
    Agent a;
    a.name = std::move(name);
    a.avg_file_size = avg_file_size_bytes;
    agents_.push_back(std::move(a));
    return static_cast<int>(agents_.size()) - 1;
}

double SimNetwork::other_streams(int agent) const {
    std::lock_guard<std::mutex> lock(mutex_);
    double total = 0;
    for (std::size_t i = 0; i < agents_.size(); ++i)
        if (static_cast<int>(i) != agent) total += agents_[i].streams;
    return total;
}

SimNetwork::Outcome SimNetwork::transfer(int agent, const ParameterPoint& theta, double bytes) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (agent < 0 || static_cast<std::size_t>(agent) >= agents_.size())
        throw std::invalid_argument("unknown agent");
    if (bytes <= 0) throw std::invalid_argument("transfer needs a positive byte count");
    if (!theta.feasible(cfg_.caps)) throw std::invalid_argument("infeasible parameter point");

    Agent& me = agents_[static_cast<std::size_t>(agent)];
    me.streams = theta.total_streams();
    double others = 0;
    for (std::size_t i = 0; i < agents_.size(); ++i)
        if (static_cast<int>(i) != agent) others += agents_[i].streams;

    Rng rng(derive_seed(derive_seed(cfg_.seed, static_cast<std::uint64_t>(agent) + 1),
                        me.transfers_done));
    me.transfers_done += 1;
    const double factor =
        1.0 + std::clamp(rng.gaussian(), -3.0, 3.0) * cfg_.noise_sigma;

    // Walk the load timeline from this agent's clock until the bytes drain.
    double t = me.clock;
    double remaining = bytes;
    while (remaining > 0) {
        const double load = cfg_.load_at(t);
        double segment_end = std::numeric_limits<double>::infinity();
        for (const auto& pt : cfg_.load_timeline)
            if (pt.time > t) {
                segment_end = pt.time;
                break;
            }
        const double base = mean_throughput(cfg_, theta, load, others, me.avg_file_size);
        const double rate = std::clamp(base * factor, 0.0, cfg_.bandwidth);
        if (rate <= 0) {
            if (segment_end == std::numeric_limits<double>::infinity())
                throw std::runtime_error("transfer stalled: no capacity left on the link");
            t = segment_end;
            continue;
        }
        const double drained = rate * kBytesPerMbitSecond * (segment_end - t);
        if (segment_end == std::numeric_limits<double>::infinity() || drained >= remaining) {
            t += remaining / (rate * kBytesPerMbitSecond);
            remaining = 0;
        } else {
            remaining -= drained;
            t = segment_end;
        }
    }

    Outcome out;
    out.elapsed_s = t - me.clock;
    out.throughput_mbps = bytes * 8.0 / 1e6 / out.elapsed_s;
    me.clock = t;
    return out;
}

void SimNetwork::release(int agent) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (agent < 0 || static_cast<std::size_t>(agent) >= agents_.size())
        throw std::invalid_argument("unknown agent");
    agents_[static_cast<std::size_t>(agent)].streams = 0;
}

double SimNetwork::clock(int agent) const {
    std::lock_guard<std::mutex> lock(mutex_);
    if (agent < 0 || static_cast<std::size_t>(agent) >= agents_.size())
        throw std::invalid_argument("unknown agent");
    return agents_[static_cast<std::size_t>(agent)].clock;
}

LogDesign full_lattice_design(const ParameterCaps& caps, const std::vector<double>& loads,
                              int reps) {
    LogDesign d;
    for (double load : loads)
        for (int cc = 1; cc <= caps.beta; ++cc)
            for (int p = 1; p <= caps.beta; ++p)
                for (int pp = 1; pp <= caps.beta; ++pp) {
                    const ParameterPoint t{cc, p, pp};
                    if (t.feasible(caps)) d.cells.push_back({t, load, reps});
                }
    return d;
}

std::vector<TransferRecord> generate_log(const SimConfig& cfg, const LogDesign& design) {
    Rng rng(derive_seed(cfg.seed, 0x4c4f47)); // log-generation sub-stream

    // Group cells by load, keeping first-appearance order, so each load
    // condition occupies one contiguous schedule block.
    std::vector<double> loads;
    for (const auto& c : design.cells)
        if (std::find(loads.begin(), loads.end(), c.load) == loads.end())
            loads.push_back(c.load);

    std::vector<TransferRecord> out;
    double t = design.start_time;
    std::int64_t next_id = 1;
    for (double load : loads) {
        const double block_start = t;
        for (const auto& cell : design.cells) {
            if (cell.load != load) continue;
            if (!cell.theta.feasible(cfg.caps))
                throw std::invalid_argument("design contains an infeasible parameter point");
            for (int rep = 0; rep < cell.reps; ++rep) {
                const double base =
                    mean_throughput(cfg, cell.theta, load, 0.0, design.avg_file_size_bytes);
                const double factor =
                    1.0 + std::clamp(rng.gaussian(), -3.0, 3.0) * cfg.noise_sigma;
                TransferRecord r;
                r.id = "t-" + std::to_string(next_id++);
                r.src_endpoint = design.src;
                r.dst_endpoint = design.dst;
                r.start_time = t;
                r.end_time = t + design.slot_seconds;
                r.rtt = cfg.rtt;
                r.bandwidth = cfg.bandwidth;
                r.avg_file_size = design.avg_file_size_bytes;
                r.num_files = design.num_files;
                r.total_size = design.avg_file_size_bytes * static_cast<double>(design.num_files);
                r.cc = cell.theta.cc;
                r.p = cell.theta.p;
                r.pp = cell.theta.pp;
                r.throughput = std::clamp(base * factor, 0.0, cfg.bandwidth);
                out.push_back(std::move(r));
                t += design.slot_seconds;
            }
        }
        // One background transfer spanning the block carries the contending
        // rate that makes the load condition recoverable from the log.
        if (load > 0) {
            const double rate = load * cfg.bandwidth;
            TransferRecord bg;
            bg.id = "bg-" + std::to_string(next_id++);
            bg.src_endpoint = design.src;
            bg.dst_endpoint = design.dst;
            bg.start_time = block_start;
            bg.end_time = t;
            bg.rtt = cfg.rtt;
            bg.bandwidth = cfg.bandwidth;
            bg.num_files = 1;
            bg.avg_file_size = rate * kBytesPerMbitSecond * (t - block_start);
            bg.total_size = bg.avg_file_size;
            bg.cc = 1;
            bg.p = 1;
            bg.pp = 1;
            bg.throughput = rate;
            out.push_back(std::move(bg));
        }
    }
    return out;
}

} // namespace flowtune
