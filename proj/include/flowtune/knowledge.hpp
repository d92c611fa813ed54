#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowtune/cluster.hpp"
#include "flowtune/surface.hpp"
#include "flowtune/types.hpp"

namespace flowtune {

// Aggregate rate and count of contending transfers in one relationship class.
struct ContenderClass {
    std::int64_t count = 0;
    double rate = 0; // Mbit/s summed over overlapping transfers

    bool operator==(const ContenderClass&) const = default;
};

// Observed competing traffic around one transfer, split into the five
// endpoint relationships, plus the resulting load-intensity value.
struct LoadProfile {
    ContenderClass same_pair; // same source and destination
    ContenderClass src_out;   // leaving our source for elsewhere
    ContenderClass src_in;    // arriving at our source
    ContenderClass dst_out;   // leaving our destination
    ContenderClass dst_in;    // arriving at our destination
    double th_out = 0;        // total contending rate, capped at link capacity
    double intensity = 1.0;   // (bw - th_out) / bw, clamped to [0, 1]
};

// (bw - th_out) / bw clamped to [0, 1]. Note the convention: an idle link
// maps to intensity 1.
double load_intensity(double bandwidth_mbps, double th_out_mbps);

// Classifies every log entry overlapping the target's time window into
// exactly one class (precedence: same_pair, src_out, src_in, dst_out,
// dst_in) and sums rates. The target itself (matched by id) is excluded.
LoadProfile classify_contenders(const TransferRecord& target,
                                const std::vector<TransferRecord>& log);

struct SurfaceMaximum {
    ParameterPoint at;
    double value = 0;
    // Interior maxima carry a negative-semidefinite Hessian certificate;
    // boundary points (any missing lattice neighbour) are exempt.
    bool certified = false;
};

struct MaximaResult {
    std::vector<SurfaceMaximum> local;
    SurfaceMaximum global;
};

// Scans the cap-feasible integer lattice inside the surface hull. A local
// maximum dominates its full 26-neighbourhood; interior points additionally
// need Hessian eigenvalues <= 1e-6. The global maximum is the exhaustive
// lattice argmax (ties to the lexicographically smallest (cc, p, pp)) and is
// always part of the local list.
MaximaResult find_maxima(const SurfaceFamily& family, const ParameterCaps& caps);

// Lattice points worth probing online: neighbourhoods of the per-surface
// maxima plus the points where the surfaces of one cluster disagree most.
struct SamplingRegion {
    std::vector<ParameterPoint> maxima_pts;         // sorted (cc, p, pp)
    std::vector<ParameterPoint> discrimination_pts; // by descending surface gap
    std::vector<ParameterPoint> all() const;        // union, sorted

    bool operator==(const SamplingRegion&) const = default;
};

// One throughput surface tagged with the load condition it was observed
// under.
struct SurfaceModel {
    double intensity = 1.0; // binned tag
    SurfaceFamily family;
    ConfidenceModel confidence;
    MaximaResult maxima;
};

// radius: Chebyshev radius of the maxima neighbourhoods; samples drawn
// uniformly (seeded, without replacement) from the cap-feasible lattice
// inside the intersection of the surface hulls. keep must satisfy
// 1 < keep < samples. With a single surface the discrimination set is empty.
SamplingRegion select_regions(const std::vector<SurfaceModel>& surfaces,
                              const ParameterCaps& caps, int radius, int samples, int keep,
                              std::uint64_t seed);

struct OfflineConfig;

// Fits one tagged surface (family + confidence + maxima) from per-lattice
// statistics. Returns nullopt when the (p, cc) grid is degenerate; `why`
// explains the skip.
std::optional<SurfaceModel> fit_surface_model(double intensity_tag, const LatticeStats& stats,
                                              const OfflineConfig& cfg,
                                              std::string* why = nullptr);

struct ClusterKnowledge {
    int cluster_id = 0;
    FeatureVector centroid; // in normalized feature space; the cluster key
    std::int64_t size = 0;  // records behind this cluster
    std::vector<SurfaceModel> surfaces; // sorted by intensity descending
    SamplingRegion region;
};

struct OfflineConfig {
    ClusterAlgorithm algorithm = ClusterAlgorithm::KMeansPP;
    int m_min = 2;
    int m_max = 8;
    std::uint64_t seed = 1;
    int min_cluster_samples = 8;
    double intensity_bin_width = 0.1;
    // When set, intensity tags are th_out/bw instead of (bw - th_out)/bw,
    // so heavier load maps to a larger tag.
    bool invert_intensity = false;
    double z = 1.96;
    int region_radius = 1;
    int region_samples = 200;
    int region_keep = 8;
    ParameterCaps caps;
    // Optional fixed normalization bounds; by default bounds are fitted from
    // the ingested log. Fixed bounds make independently built bases
    // mergeable.
    std::optional<FeatureSchema> feature_bounds;
    double query_warn_distance = 0.5;

    bool operator==(const OfflineConfig&) const = default;

    // Canonical serialization of every field above; equal configs hash equal.
    std::string canonical() const;
    std::string fingerprint() const;
};

struct KnowledgeBase {
    OfflineConfig config;
    FeatureSchema schema;
    double built_at = 0; // latest end_time seen in the ingested logs
    std::vector<ClusterKnowledge> entries; // sorted by centroid, ids = position

    std::string fingerprint() const { return config.fingerprint(); }
};

struct BuildDiagnostics {
    std::vector<std::string> warnings;
    int m = 0; // selected cluster count
    double ch_score = std::numeric_limits<double>::quiet_NaN();
};

// The offline pipeline: cluster the log, bin each cluster's records by load
// intensity, fit one surface per bin with its confidence envelope, locate
// maxima, and choose sampling regions. Deterministic for a fixed config.
KnowledgeBase build_kb(const std::vector<TransferRecord>& log, const OfflineConfig& config,
                       BuildDiagnostics* diag = nullptr);

// Key-wise union; clusters with identical centroids are re-fit from the
// pooled per-lattice statistics. Requires matching fingerprints and schemas.
KnowledgeBase merge_kb(const KnowledgeBase& base, const KnowledgeBase& delta);

struct QueryResult {
    const ClusterKnowledge* knowledge = nullptr;
    double distance = 0;
    bool far = false; // distance exceeded config.query_warn_distance
};

QueryResult query_kb(const KnowledgeBase& kb, const TransferRequest& request);

} // namespace flowtune
