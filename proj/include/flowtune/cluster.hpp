#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "flowtune/types.hpp"

namespace flowtune {

using FeatureVector = Eigen::VectorXd;

// Transfer characteristics used for grouping: round-trip time, link
// capacity, and log-scaled dataset shape. Tunables are deliberately absent.
inline constexpr int kFeatureDim = 4;

FeatureVector transfer_features(double rtt_ms, double bandwidth_mbps, double avg_file_size_bytes,
                                double num_files);
FeatureVector transfer_features(const TransferRecord& r);
FeatureVector transfer_features(const TransferRequest& r);

// Per-dimension min-max scaling fitted on a log; queries reuse the stored
// bounds so distances stay comparable after persistence.
struct FeatureSchema {
    Eigen::VectorXd mins;
    Eigen::VectorXd maxs;

    bool operator==(const FeatureSchema&) const = default;

    FeatureVector normalize(const FeatureVector& raw) const;
};

// Fits bounds from raw feature vectors. Dimensions with zero range normalize
// to 0 (they carry no information for this log).
FeatureSchema fit_feature_schema(const std::vector<FeatureVector>& raw);

double pairwise_distance(const FeatureVector& a, const FeatureVector& b);

struct Clustering {
    std::vector<int> assignments;         // record index -> cluster id in [0, m)
    std::vector<FeatureVector> centroids; // mean of assigned members
    int m = 0;
    double ch_score = std::numeric_limits<double>::quiet_NaN();
};

enum class ClusterAlgorithm { KMeansPP, Hac };

// Seeded k-means++ initialization followed by Lloyd iterations to an
// assignment fixpoint (or max_iters). Ties in assignment go to the lowest
// cluster id; emptied clusters are refilled with the farthest point from its
// centroid. `objective_trace`, when given, records the within-cluster sum of
// squares after every iteration.
Clustering kmeanspp(const std::vector<FeatureVector>& vectors, int m, std::uint64_t seed,
                    int max_iters = 100, std::vector<double>* objective_trace = nullptr);

// Agglomerative clustering merging the pair of clusters with the smallest
// centroid distance until m remain. Distance ties break on the lowest pair
// of cluster ids, so the merge sequence is deterministic.
Clustering hac(const std::vector<FeatureVector>& vectors, int m);

// Variance-ratio cluster validity score: between-cluster scatter over
// within-cluster scatter, scaled by the degrees of freedom. Returns 0 when
// all points coincide and +infinity for perfectly tight distinct clusters.
double ch_index(const std::vector<FeatureVector>& vectors, const Clustering& clustering);

// Runs the chosen algorithm for every m in [m_min, m_max] and keeps the
// clustering with the largest score; ties prefer smaller m. Values of m
// exceeding the distinct-vector count are skipped.
Clustering select_m(const std::vector<FeatureVector>& vectors, int m_min, int m_max,
                    ClusterAlgorithm algorithm, std::uint64_t seed);

} // namespace flowtune
