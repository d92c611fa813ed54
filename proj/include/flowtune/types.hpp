#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace flowtune {

using Scalar = double;

// Thrown on malformed files, version mismatches, broken invariants in
// persisted data.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Upper bounds the transfer service enforces on the tunable parameters.
struct ParameterCaps {
    int beta = 8;           // per-component upper bound
    int max_streams = 64;   // cc * p must not exceed this
    int max_pipelining = 8; // pp must not exceed this

    bool operator==(const ParameterCaps&) const = default;
};

// The tuning triple: concurrency (simultaneous file channels), parallelism
// (streams per file), pipelining (queued commands per channel).
struct ParameterPoint {
    int cc = 1;
    int p = 1;
    int pp = 1;

    bool operator==(const ParameterPoint&) const = default;
    // Lexicographic (cc, p, pp); used for deterministic tie-breaking.
    auto operator<=>(const ParameterPoint& o) const {
        return std::tie(cc, p, pp) <=> std::tie(o.cc, o.p, o.pp);
    }

    bool in_bounds(int beta) const {
        return cc >= 1 && cc <= beta && p >= 1 && p <= beta && pp >= 1 && pp <= beta;
    }
    bool feasible(const ParameterCaps& caps) const {
        return in_bounds(caps.beta) && cc * p <= caps.max_streams && pp <= caps.max_pipelining;
    }
    int total_streams() const { return cc * p; }
};

// One historical log entry. Units: times are seconds since epoch, rtt is
// milliseconds, rates are Mbit/s, sizes are bytes.
struct TransferRecord {
    std::string id;
    std::string src_endpoint;
    std::string dst_endpoint;
    double start_time = 0;
    double end_time = 0;
    double rtt = 0;
    double bandwidth = 0;
    double avg_file_size = 0;
    std::int64_t num_files = 0;
    double total_size = 0;
    int cc = 1;
    int p = 1;
    int pp = 1;
    double throughput = 0;

    bool operator==(const TransferRecord&) const = default;

    ParameterPoint params() const { return {cc, p, pp}; }

    // Returns a violation description, or nullopt if the record is valid.
    std::optional<std::string> violation() const {
        if (!(end_time > start_time)) return "end_time not after start_time";
        if (throughput < 0) return "negative throughput";
        if (throughput > bandwidth) return "throughput exceeds capacity";
        if (cc < 1 || p < 1 || pp < 1) return "parameter below 1";
        if (num_files < 1) return "num_files below 1";
        if (!(avg_file_size > 0)) return "avg_file_size not positive";
        if (total_size > 0) {
            const double expect = avg_file_size * static_cast<double>(num_files);
            if (std::abs(total_size - expect) / total_size > 0.5)
                return "total_size inconsistent with avg_file_size*num_files";
        } else {
            return "total_size not positive";
        }
        return std::nullopt;
    }
};

// An incoming transfer to tune: endpoints, link metrics, and the dataset as
// an ordered list of file sizes in bytes.
struct TransferRequest {
    std::string src_endpoint;
    std::string dst_endpoint;
    double rtt = 0;
    double bandwidth = 0;
    double avg_file_size = 0;
    std::int64_t num_files = 0;
    std::vector<double> dataset;

    double total_bytes() const {
        double s = 0;
        for (double f : dataset) s += f;
        return s;
    }
};

inline TransferRequest make_request(std::string src, std::string dst, double rtt_ms,
                                    double bandwidth_mbps, std::vector<double> file_sizes) {
    TransferRequest r;
    r.src_endpoint = std::move(src);
    r.dst_endpoint = std::move(dst);
    r.rtt = rtt_ms;
    r.bandwidth = bandwidth_mbps;
    r.dataset = std::move(file_sizes);
    r.num_files = static_cast<std::int64_t>(r.dataset.size());
    r.avg_file_size = r.num_files > 0 ? r.total_bytes() / static_cast<double>(r.num_files) : 0;
    return r;
}

} // namespace flowtune
