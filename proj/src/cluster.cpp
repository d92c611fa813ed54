#include "flowtune/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "flowtune/rng.hpp"

namespace flowtune {

FeatureVector transfer_features(double rtt_ms, double bandwidth_mbps, double avg_file_size_bytes,
                                double num_files) {
    FeatureVector v(kFeatureDim);
    v << rtt_ms, bandwidth_mbps, std::log10(avg_file_size_bytes), std::log10(num_files);
    return v;
}

FeatureVector transfer_features(const TransferRecord& r) {
    return transfer_features(r.rtt, r.bandwidth, r.avg_file_size,
                             static_cast<double>(r.num_files));
}

FeatureVector transfer_features(const TransferRequest& r) {
    return transfer_features(r.rtt, r.bandwidth, r.avg_file_size,
                             static_cast<double>(r.num_files));
}

FeatureVector FeatureSchema::normalize(const FeatureVector& raw) const {
    if (raw.size() != mins.size()) throw std::invalid_argument("feature dimension mismatch");
    FeatureVector out(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) {
        const double range = maxs[i] - mins[i];
        out[i] = range > 0 ? (raw[i] - mins[i]) / range : 0.0;
    }
    return out;
}

FeatureSchema fit_feature_schema(const std::vector<FeatureVector>& raw) {
    if (raw.empty()) throw std::invalid_argument("no feature vectors");
    FeatureSchema s;
    s.mins = raw.front();
    s.maxs = raw.front();
    for (const auto& v : raw) {
        if (v.size() != s.mins.size()) throw std::invalid_argument("feature dimension mismatch");
        s.mins = s.mins.cwiseMin(v);
        s.maxs = s.maxs.cwiseMax(v);
    }
    return s;
}

double pairwise_distance(const FeatureVector& a, const FeatureVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("feature dimension mismatch");
    return (a - b).norm();
}

namespace {

std::size_t distinct_count(const std::vector<FeatureVector>& vectors) {
    std::vector<std::vector<double>> keys;
    keys.reserve(vectors.size());
    for (const auto& v : vectors) keys.emplace_back(v.data(), v.data() + v.size());
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return keys.size();
}

void recompute_centroids(const std::vector<FeatureVector>& vectors, Clustering& c) {
    const Eigen::Index dim = vectors.front().size();
    std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(c.m), Eigen::VectorXd::Zero(dim));
    std::vector<std::int64_t> counts(static_cast<std::size_t>(c.m), 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        sums[static_cast<std::size_t>(c.assignments[i])] += vectors[i];
        counts[static_cast<std::size_t>(c.assignments[i])] += 1;
    }
    c.centroids.resize(static_cast<std::size_t>(c.m));
    for (int k = 0; k < c.m; ++k)
        c.centroids[static_cast<std::size_t>(k)] =
            sums[static_cast<std::size_t>(k)] / static_cast<double>(counts[static_cast<std::size_t>(k)]);
}

double wcss(const std::vector<FeatureVector>& vectors, const Clustering& c) {
    double w = 0;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        w += (vectors[i] - c.centroids[static_cast<std::size_t>(c.assignments[i])]).squaredNorm();
    return w;
}

} // namespace

Clustering kmeanspp(const std::vector<FeatureVector>& vectors, int m, std::uint64_t seed,
                    int max_iters, std::vector<double>* objective_trace) {
    const std::size_t n = vectors.size();
    if (m < 1) throw std::invalid_argument("cluster count must be at least 1");
    if (n == 0) throw std::invalid_argument("no vectors to cluster");
    if (static_cast<std::size_t>(m) > distinct_count(vectors))
        throw std::invalid_argument("cluster count exceeds distinct vectors");

    Rng rng(seed);
    std::vector<FeatureVector> centers;
    centers.reserve(static_cast<std::size_t>(m));
    centers.push_back(vectors[rng.uniform_index(n)]);

    std::vector<double> d2(n);
    while (centers.size() < static_cast<std::size_t>(m)) {
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, (vectors[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        const double r = rng.uniform() * total;
        double cum = 0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            cum += d2[i];
            if (r < cum) {
                pick = i;
                break;
            }
        }
        centers.push_back(vectors[pick]);
    }

    Clustering c;
    c.m = m;
    c.assignments.assign(n, 0);
    c.centroids = std::move(centers);

    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best_k = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int k = 0; k < m; ++k) {
                const double d = (vectors[i] - c.centroids[static_cast<std::size_t>(k)]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best_k = k;
                }
            }
            if (c.assignments[i] != best_k) {
                c.assignments[i] = best_k;
                changed = true;
            }
        }

        // Refill emptied clusters with the point farthest from its centroid.
        std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
        for (int a : c.assignments) counts[static_cast<std::size_t>(a)] += 1;
        for (int k = 0; k < m; ++k) {
            if (counts[static_cast<std::size_t>(k)] > 0) continue;
            std::size_t far_i = 0;
            double far_d = -1;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(c.assignments[i])] <= 1) continue;
                const double d =
                    (vectors[i] - c.centroids[static_cast<std::size_t>(c.assignments[i])]).squaredNorm();
                if (d > far_d) {
                    far_d = d;
                    far_i = i;
                }
            }
            counts[static_cast<std::size_t>(c.assignments[far_i])] -= 1;
            c.assignments[far_i] = k;
            counts[static_cast<std::size_t>(k)] += 1;
            changed = true;
        }

        recompute_centroids(vectors, c);
        if (objective_trace) objective_trace->push_back(wcss(vectors, c));
        if (!changed) break;
    }
    return c;
}

Clustering hac(const std::vector<FeatureVector>& vectors, int m) {
    const std::size_t n = vectors.size();
    if (m < 1) throw std::invalid_argument("cluster count must be at least 1");
    if (n == 0) throw std::invalid_argument("no vectors to cluster");
    if (static_cast<std::size_t>(m) > n) throw std::invalid_argument("cluster count exceeds points");

    struct Node {
        bool alive = true;
        Eigen::VectorXd centroid;
        std::int64_t size = 0;
        std::size_t nn = 0; // nearest alive neighbour
        double nn_dist = std::numeric_limits<double>::infinity();
    };
    std::vector<Node> nodes(n);
    std::vector<int> owner(n); // point -> current cluster id
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].centroid = vectors[i];
        nodes[i].size = 1;
        owner[i] = static_cast<int>(i);
    }

    auto rescan_nn = [&](std::size_t i) {
        nodes[i].nn_dist = std::numeric_limits<double>::infinity();
        nodes[i].nn = i;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || !nodes[j].alive) continue;
            const double d = (nodes[i].centroid - nodes[j].centroid).norm();
            if (d < nodes[i].nn_dist || (d == nodes[i].nn_dist && j < nodes[i].nn)) {
                nodes[i].nn_dist = d;
                nodes[i].nn = j;
            }
        }
    };
    for (std::size_t i = 0; i < n; ++i) rescan_nn(i);

    std::size_t alive = n;
    while (alive > static_cast<std::size_t>(m)) {
        // Globally closest pair; ties resolve to the lowest (low, high) ids.
        std::size_t best_a = n, best_b = n;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!nodes[i].alive) continue;
            const std::size_t a = std::min(i, nodes[i].nn);
            const std::size_t b = std::max(i, nodes[i].nn);
            const double d = nodes[i].nn_dist;
            if (d < best_d || (d == best_d && (a < best_a || (a == best_a && b < best_b)))) {
                best_d = d;
                best_a = a;
                best_b = b;
            }
        }

        Node& keep = nodes[best_a];
        Node& gone = nodes[best_b];
        keep.centroid = (keep.centroid * static_cast<double>(keep.size) +
                         gone.centroid * static_cast<double>(gone.size)) /
                        static_cast<double>(keep.size + gone.size);
        keep.size += gone.size;
        gone.alive = false;
        for (std::size_t i = 0; i < n; ++i)
            if (owner[i] == static_cast<int>(best_b)) owner[i] = static_cast<int>(best_a);
        --alive;

        rescan_nn(best_a);
        for (std::size_t i = 0; i < n; ++i) {
            if (!nodes[i].alive || i == best_a) continue;
            if (nodes[i].nn == best_a || nodes[i].nn == best_b) {
                rescan_nn(i);
            } else {
                // Centroid moved; the merged cluster may have become closer.
                const double d = (nodes[i].centroid - keep.centroid).norm();
                if (d < nodes[i].nn_dist || (d == nodes[i].nn_dist && best_a < nodes[i].nn)) {
                    nodes[i].nn_dist = d;
                    nodes[i].nn = best_a;
                }
            }
        }
    }

    // Relabel surviving clusters 0..m-1 in order of their smallest member.
    std::vector<int> relabel(n, -1);
    int next = 0;
    Clustering c;
    c.m = m;
    c.assignments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int cl = owner[i];
        if (relabel[static_cast<std::size_t>(cl)] < 0) relabel[static_cast<std::size_t>(cl)] = next++;
        c.assignments[i] = relabel[static_cast<std::size_t>(cl)];
    }
    recompute_centroids(vectors, c);
    return c;
}

double ch_index(const std::vector<FeatureVector>& vectors, const Clustering& clustering) {
    const std::size_t n = vectors.size();
    const int m = clustering.m;
    if (m < 2) throw std::invalid_argument("ch_index needs at least 2 clusters");
    if (static_cast<std::size_t>(m) >= n) throw std::invalid_argument("ch_index needs m < n");

    Eigen::VectorXd overall = Eigen::VectorXd::Zero(vectors.front().size());
    for (const auto& v : vectors) overall += v;
    overall /= static_cast<double>(n);

    std::vector<std::int64_t> counts(static_cast<std::size_t>(m), 0);
    for (int a : clustering.assignments) counts[static_cast<std::size_t>(a)] += 1;

    double between = 0;
    for (int k = 0; k < m; ++k)
        between += static_cast<double>(counts[static_cast<std::size_t>(k)]) *
                   (clustering.centroids[static_cast<std::size_t>(k)] - overall).squaredNorm();
    double within = wcss(vectors, clustering);

    if (between == 0) return 0;
    if (within == 0) return std::numeric_limits<double>::infinity();
    return (between / static_cast<double>(m - 1)) /
           (within / static_cast<double>(n - static_cast<std::size_t>(m)));
}

Clustering select_m(const std::vector<FeatureVector>& vectors, int m_min, int m_max,
                    ClusterAlgorithm algorithm, std::uint64_t seed) {
    if (m_min > m_max) throw std::invalid_argument("empty cluster-count range");
    const std::size_t distinct = distinct_count(vectors);

    Clustering best;
    bool have = false;
    for (int m = m_min; m <= m_max; ++m) {
        if (m < 2 || static_cast<std::size_t>(m) >= vectors.size() ||
            static_cast<std::size_t>(m) > distinct)
            continue;
        Clustering c = algorithm == ClusterAlgorithm::KMeansPP
                           ? kmeanspp(vectors, m, derive_seed(seed, static_cast<std::uint64_t>(m)))
                           : hac(vectors, m);
        c.ch_score = ch_index(vectors, c);
        if (!have || c.ch_score > best.ch_score) {
            best = std::move(c);
            have = true;
        }
    }
    if (!have) throw std::invalid_argument("no feasible cluster count in range");
    return best;
}

} // namespace flowtune
