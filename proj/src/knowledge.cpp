#include "flowtune/knowledge.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "flowtune/logio.hpp"
#include "flowtune/rng.hpp"

namespace flowtune {

double load_intensity(double bandwidth_mbps, double th_out_mbps) {
    if (bandwidth_mbps <= 0) throw std::invalid_argument("bandwidth must be positive");
    if (th_out_mbps < 0) throw std::invalid_argument("contending rate must be nonnegative");
    return std::clamp((bandwidth_mbps - th_out_mbps) / bandwidth_mbps, 0.0, 1.0);
}

LoadProfile classify_contenders(const TransferRecord& target,
                                const std::vector<TransferRecord>& log) {
    LoadProfile prof;
    for (const auto& r : log) {
        const bool overlaps = r.start_time < target.end_time && r.end_time > target.start_time;
        if (!overlaps) continue;
        if (!r.id.empty() && r.id == target.id) continue;

        ContenderClass* cls = nullptr;
        if (r.src_endpoint == target.src_endpoint && r.dst_endpoint == target.dst_endpoint)
            cls = &prof.same_pair;
        else if (r.src_endpoint == target.src_endpoint)
            cls = &prof.src_out;
        else if (r.dst_endpoint == target.src_endpoint)
            cls = &prof.src_in;
        else if (r.src_endpoint == target.dst_endpoint)
            cls = &prof.dst_out;
        else if (r.dst_endpoint == target.dst_endpoint)
            cls = &prof.dst_in;
        if (!cls) continue;
        cls->count += 1;
        cls->rate += r.throughput;
    }
    const double total = prof.same_pair.rate + prof.src_out.rate + prof.src_in.rate +
                         prof.dst_out.rate + prof.dst_in.rate;
    prof.th_out = std::min(total, target.bandwidth);
    prof.intensity = load_intensity(target.bandwidth, prof.th_out);
    return prof;
}

MaximaResult find_maxima(const SurfaceFamily& family, const ParameterCaps& caps) {
    const auto& px = family.p_axis();
    const auto& cx = family.cc_axis();
    const int p_lo = std::max(1, static_cast<int>(std::ceil(px[0])));
    const int p_hi = std::min(caps.beta, static_cast<int>(std::floor(px[px.size() - 1])));
    const int c_lo = std::max(1, static_cast<int>(std::ceil(cx[0])));
    const int c_hi = std::min(caps.beta, static_cast<int>(std::floor(cx[cx.size() - 1])));
    const int q_lo = std::max(1, static_cast<int>(std::ceil(family.pp_min())));
    const int q_hi = std::min({caps.beta, caps.max_pipelining,
                               static_cast<int>(std::floor(family.pp_max()))});

    std::map<ParameterPoint, double> value;
    for (int cc = c_lo; cc <= c_hi; ++cc)
        for (int p = p_lo; p <= p_hi; ++p)
            for (int pp = q_lo; pp <= q_hi; ++pp) {
                const ParameterPoint t{cc, p, pp};
                if (!t.feasible(caps)) continue;
                value.emplace(t, family.eval(t));
            }
    if (value.empty()) throw std::invalid_argument("no feasible lattice point on surface");

    MaximaResult res;
    bool have_global = false;
    for (const auto& [t, v] : value) {
        bool dominant = true;
        bool interior = true;
        for (int dc = -1; dc <= 1 && dominant; ++dc)
            for (int dp = -1; dp <= 1 && dominant; ++dp)
                for (int dq = -1; dq <= 1; ++dq) {
                    if (dc == 0 && dp == 0 && dq == 0) continue;
                    auto it = value.find(ParameterPoint{t.cc + dc, t.p + dp, t.pp + dq});
                    if (it == value.end()) {
                        interior = false;
                        continue;
                    }
                    if (it->second > v) {
                        dominant = false;
                        break;
                    }
                }
        if (!dominant) {
            // still a candidate for the global argmax below
        } else {
            bool ok = true;
            if (interior) {
                const Eigen::Matrix3d h = family.hessian(t.p, t.cc, t.pp);
                Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(h);
                ok = eig.eigenvalues().maxCoeff() <= 1e-6;
            }
            if (ok) res.local.push_back({t, v, true});
        }
        if (!have_global || v > res.global.value) {
            res.global = {t, v, true};
            have_global = true;
        }
    }

    // The exhaustive argmax dominates its neighbourhood by construction; keep
    // it in the list even when its interior curvature certificate fails.
    const bool listed = std::any_of(res.local.begin(), res.local.end(),
                                    [&](const SurfaceMaximum& m) { return m.at == res.global.at; });
    if (!listed) {
        res.global.certified = false;
        res.local.push_back(res.global);
        std::sort(res.local.begin(), res.local.end(),
                  [](const SurfaceMaximum& a, const SurfaceMaximum& b) { return a.at < b.at; });
    } else {
        res.global.certified = true;
    }
    return res;
}

std::vector<ParameterPoint> SamplingRegion::all() const {
    std::vector<ParameterPoint> u = maxima_pts;
    u.insert(u.end(), discrimination_pts.begin(), discrimination_pts.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    return u;
}

SamplingRegion select_regions(const std::vector<SurfaceModel>& surfaces,
                              const ParameterCaps& caps, int radius, int samples, int keep,
                              std::uint64_t seed) {
    if (surfaces.empty()) throw std::invalid_argument("need at least one surface");
    if (!(1 < keep && keep < samples))
        throw std::invalid_argument("region keep count must satisfy 1 < keep < samples");

    SamplingRegion region;
    // Neighbourhoods of the per-surface maxima (Chebyshev radius).
    std::set<ParameterPoint> rm;
    for (const auto& s : surfaces) {
        const ParameterPoint c = s.maxima.global.at;
        for (int dc = -radius; dc <= radius; ++dc)
            for (int dp = -radius; dp <= radius; ++dp)
                for (int dq = -radius; dq <= radius; ++dq) {
                    const ParameterPoint t{c.cc + dc, c.p + dp, c.pp + dq};
                    if (t.feasible(caps)) rm.insert(t);
                }
    }
    region.maxima_pts.assign(rm.begin(), rm.end());

    if (surfaces.size() < 2) return region;

    // Candidate lattice: cap-feasible points every surface can evaluate.
    std::vector<ParameterPoint> domain;
    for (int cc = 1; cc <= caps.beta; ++cc)
        for (int p = 1; p <= caps.beta; ++p)
            for (int pp = 1; pp <= caps.beta; ++pp) {
                const ParameterPoint t{cc, p, pp};
                if (!t.feasible(caps)) continue;
                bool everywhere = true;
                for (const auto& s : surfaces)
                    if (!s.family.in_domain(t)) {
                        everywhere = false;
                        break;
                    }
                if (everywhere) domain.push_back(t);
            }
    if (domain.empty()) return region;

    // Seeded draw without replacement.
    Rng rng(seed);
    const std::size_t draws = std::min<std::size_t>(static_cast<std::size_t>(samples), domain.size());
    for (std::size_t k = 0; k < draws; ++k) {
        const std::size_t j = k + rng.uniform_index(domain.size() - k);
        std::swap(domain[k], domain[j]);
    }

    struct Scored {
        ParameterPoint at;
        double gap;
    };
    std::vector<Scored> scored;
    scored.reserve(draws);
    for (std::size_t k = 0; k < draws; ++k) {
        const ParameterPoint& u = domain[k];
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < surfaces.size(); ++i)
            for (std::size_t j = i + 1; j < surfaces.size(); ++j)
                gap = std::min(gap, std::abs(surfaces[i].family.eval(u) - surfaces[j].family.eval(u)));
        scored.push_back({u, gap});
    }
    // Descending by gap; draw order breaks ties.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.gap > b.gap; });
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(keep), scored.size());
    for (std::size_t k = 0; k < take; ++k) region.discrimination_pts.push_back(scored[k].at);
    return region;
}

std::string OfflineConfig::canonical() const {
    std::ostringstream s;
    s << "algorithm=" << (algorithm == ClusterAlgorithm::KMeansPP ? "kmeans++" : "hac")
      << ";m_min=" << m_min << ";m_max=" << m_max << ";seed=" << seed
      << ";min_cluster_samples=" << min_cluster_samples
      << ";intensity_bin_width=" << format_double(intensity_bin_width)
      << ";invert_intensity=" << (invert_intensity ? 1 : 0) << ";z=" << format_double(z)
      << ";region_radius=" << region_radius << ";region_samples=" << region_samples
      << ";region_keep=" << region_keep << ";beta=" << caps.beta
      << ";max_streams=" << caps.max_streams << ";max_pipelining=" << caps.max_pipelining
      << ";query_warn_distance=" << format_double(query_warn_distance);
    s << ";feature_bounds=";
    if (feature_bounds) {
        for (Eigen::Index i = 0; i < feature_bounds->mins.size(); ++i)
            s << format_double(feature_bounds->mins[i]) << ','
              << format_double(feature_bounds->maxs[i]) << ',';
    } else {
        s << "auto";
    }
    return s.str();
}

std::string OfflineConfig::fingerprint() const {
    std::ostringstream s;
    s << std::hex << fnv1a(canonical());
    return s.str();
}

namespace {
constexpr std::uint64_t kRegionStream = 0x524547u; // region-sampling sub-stream
} // namespace

std::optional<SurfaceModel> fit_surface_model(double intensity_tag, const LatticeStats& stats,
                                              const OfflineConfig& cfg, std::string* why) {
    std::set<double> pset, cset, qset;
    for (const auto& [t, st] : stats) {
        (void)st;
        pset.insert(static_cast<double>(t.p));
        cset.insert(static_cast<double>(t.cc));
        qset.insert(static_cast<double>(t.pp));
    }
    if (pset.size() < 2 || cset.size() < 2) {
        if (why) *why = "degenerate (p, cc) grid";
        return std::nullopt;
    }

    Eigen::VectorXd p_axis(static_cast<Eigen::Index>(pset.size()));
    Eigen::VectorXd cc_axis(static_cast<Eigen::Index>(cset.size()));
    std::map<double, Eigen::Index> p_idx, c_idx;
    Eigen::Index k = 0;
    for (double v : pset) {
        p_axis[k] = v;
        p_idx[v] = k++;
    }
    k = 0;
    for (double v : cset) {
        cc_axis[k] = v;
        c_idx[v] = k++;
    }

    std::vector<SurfaceSlice> slices;
    for (double ppv : qset) {
        Eigen::MatrixXd z = Eigen::MatrixXd::Zero(p_axis.size(), cc_axis.size());
        Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> obs =
            Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>::Zero(p_axis.size(), cc_axis.size());
        for (const auto& [t, st] : stats) {
            if (static_cast<double>(t.pp) != ppv) continue;
            const Eigen::Index i = p_idx.at(static_cast<double>(t.p));
            const Eigen::Index j = c_idx.at(static_cast<double>(t.cc));
            z(i, j) = st.mean;
            obs(i, j) = 1;
        }
        fill_missing_nodes(p_axis, cc_axis, z, obs);
        SurfaceSlice s;
        s.pp_value = ppv;
        s.patch = BicubicGrid::fit(p_axis, cc_axis, z);
        s.observed = std::move(obs);
        slices.push_back(std::move(s));
    }

    SurfaceModel model;
    model.intensity = intensity_tag;
    model.family = SurfaceFamily(std::move(slices));
    model.confidence = fit_confidence(stats, cfg.z);
    model.maxima = find_maxima(model.family, cfg.caps);
    return model;
}

namespace {

bool centroid_less(const FeatureVector& a, const FeatureVector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
}

// Bins keyed by llround(tag / width) so merge matching is float-safe.
long long intensity_bin(double tag, double width) {
    return static_cast<long long>(std::llround(tag / width));
}

std::vector<SurfaceModel> fit_bin_surfaces(const std::map<long long, LatticeStats>& bins,
                                           const OfflineConfig& cfg,
                                           std::vector<std::string>* warnings) {
    std::vector<SurfaceModel> out;
    for (const auto& [bin, stats] : bins) {
        const double tag = static_cast<double>(bin) * cfg.intensity_bin_width;
        std::string why;
        auto model = fit_surface_model(tag, stats, cfg, &why);
        if (!model) {
            if (warnings)
                warnings->push_back("surface bin " + format_double(tag) + " skipped: " + why);
            continue;
        }
        out.push_back(std::move(*model));
    }
    // Tag order: descending intensity.
    std::sort(out.begin(), out.end(),
              [](const SurfaceModel& a, const SurfaceModel& b) { return a.intensity > b.intensity; });
    return out;
}

void finalize_entries(KnowledgeBase& kb) {
    std::sort(kb.entries.begin(), kb.entries.end(),
              [](const ClusterKnowledge& a, const ClusterKnowledge& b) {
                  return centroid_less(a.centroid, b.centroid);
              });
    for (std::size_t i = 0; i < kb.entries.size(); ++i)
        kb.entries[i].cluster_id = static_cast<int>(i);
}

} // namespace

KnowledgeBase build_kb(const std::vector<TransferRecord>& log, const OfflineConfig& config,
                       BuildDiagnostics* diag) {
    if (log.empty()) throw std::invalid_argument("empty log");
    std::vector<std::string> sink;
    std::vector<std::string>& warnings = diag ? diag->warnings : sink;

    std::vector<FeatureVector> raw;
    raw.reserve(log.size());
    for (const auto& r : log) raw.push_back(transfer_features(r));

    KnowledgeBase kb;
    kb.config = config;
    kb.schema = config.feature_bounds ? *config.feature_bounds : fit_feature_schema(raw);

    std::vector<FeatureVector> vectors;
    vectors.reserve(raw.size());
    for (const auto& v : raw) vectors.push_back(kb.schema.normalize(v));

    Clustering clustering;
    const int m_cap = std::min<int>(config.m_max, static_cast<int>(log.size()) - 1);
    bool single = config.m_min > m_cap;
    if (!single) {
        try {
            clustering = select_m(vectors, config.m_min, m_cap, config.algorithm, config.seed);
        } catch (const std::invalid_argument&) {
            single = true;
        }
    }
    if (single) {
        warnings.push_back("clustering degenerate; using a single cluster");
        clustering.m = 1;
        clustering.assignments.assign(vectors.size(), 0);
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(vectors.front().size());
        for (const auto& v : vectors) mean += v;
        clustering.centroids = {mean / static_cast<double>(vectors.size())};
    }
    if (diag) {
        diag->m = clustering.m;
        diag->ch_score = clustering.ch_score;
    }

    for (int c = 0; c < clustering.m; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < log.size(); ++i)
            if (clustering.assignments[i] == c) members.push_back(i);
        if (members.size() < static_cast<std::size_t>(config.min_cluster_samples)) {
            warnings.push_back("cluster " + std::to_string(c) + " skipped: " +
                               std::to_string(members.size()) + " samples < minimum " +
                               std::to_string(config.min_cluster_samples));
            continue;
        }

        std::map<long long, LatticeStats> bins;
        for (std::size_t i : members) {
            const LoadProfile prof = classify_contenders(log[i], log);
            const double tag =
                config.invert_intensity ? 1.0 - prof.intensity : prof.intensity;
            bins[intensity_bin(tag, config.intensity_bin_width)][log[i].params()].add(
                log[i].throughput);
        }

        ClusterKnowledge entry;
        entry.centroid = clustering.centroids[static_cast<std::size_t>(c)];
        entry.size = static_cast<std::int64_t>(members.size());
        entry.surfaces = fit_bin_surfaces(bins, config, &warnings);
        if (entry.surfaces.empty()) {
            warnings.push_back("cluster " + std::to_string(c) + " skipped: no fittable surface");
            continue;
        }
        entry.region =
            select_regions(entry.surfaces, config.caps, config.region_radius,
                           config.region_samples, config.region_keep,
                           derive_seed(config.seed, kRegionStream));
        kb.entries.push_back(std::move(entry));
    }

    double latest = 0;
    for (const auto& r : log) latest = std::max(latest, r.end_time);
    kb.built_at = latest;
    finalize_entries(kb);
    return kb;
}

KnowledgeBase merge_kb(const KnowledgeBase& base, const KnowledgeBase& delta) {
    if (base.fingerprint() != delta.fingerprint())
        throw FormatError("config fingerprint mismatch: " + base.fingerprint() + " vs " +
                          delta.fingerprint());
    if (!(base.schema == delta.schema))
        throw FormatError("feature schema mismatch between knowledge bases");

    const OfflineConfig& cfg = base.config;
    KnowledgeBase out;
    out.config = cfg;
    out.schema = base.schema;
    out.built_at = std::max(base.built_at, delta.built_at);
    out.entries = base.entries;

    for (const auto& incoming : delta.entries) {
        auto match = std::find_if(out.entries.begin(), out.entries.end(),
                                  [&](const ClusterKnowledge& e) {
                                      return e.centroid.size() == incoming.centroid.size() &&
                                             e.centroid == incoming.centroid;
                                  });
        if (match == out.entries.end()) {
            out.entries.push_back(incoming);
            continue;
        }

        // Pool per-lattice statistics bin-wise, then re-fit.
        std::map<long long, LatticeStats> bins;
        auto absorb = [&](const ClusterKnowledge& e) {
            for (const auto& s : e.surfaces) {
                LatticeStats& dst = bins[intensity_bin(s.intensity, cfg.intensity_bin_width)];
                for (const auto& [pt, st] : s.confidence.stats)
                    dst[pt] = PointStats::merged(dst[pt], st);
            }
        };
        absorb(*match);
        absorb(incoming);

        ClusterKnowledge merged;
        merged.centroid = match->centroid;
        merged.size = match->size + incoming.size;
        merged.surfaces = fit_bin_surfaces(bins, cfg, nullptr);
        if (merged.surfaces.empty()) {
            // Nothing fittable from the pooled statistics; keep the base entry.
            continue;
        }
        merged.region =
            select_regions(merged.surfaces, cfg.caps, cfg.region_radius, cfg.region_samples,
                           cfg.region_keep, derive_seed(cfg.seed, kRegionStream));
        *match = std::move(merged);
    }

    finalize_entries(out);
    return out;
}

QueryResult query_kb(const KnowledgeBase& kb, const TransferRequest& request) {
    if (kb.entries.empty()) throw std::invalid_argument("empty knowledge base");
    const FeatureVector probe = kb.schema.normalize(transfer_features(request));

    QueryResult res;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : kb.entries) {
        const double d = pairwise_distance(probe, e.centroid);
        if (d < best) {
            best = d;
            res.knowledge = &e;
        }
    }
    res.distance = best;
    res.far = best > kb.config.query_warn_distance;
    return res;
}

} // namespace flowtune
