#include "flowtune/kbstore.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flowtune {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "1";

json vector_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index m = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::MatrixXd out(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    return out;
}

json imatrix_to_json(const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> imatrix_from_json(const json& rows) {
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index m = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> out(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
            out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<int>();
    return out;
}

json theta_to_json(const ParameterPoint& t) {
    return json{{"cc", t.cc}, {"p", t.p}, {"pp", t.pp}};
}

ParameterPoint theta_from_json(const json& j) {
    return ParameterPoint{j.at("cc").get<int>(), j.at("p").get<int>(), j.at("pp").get<int>()};
}

json config_to_json(const OfflineConfig& c) {
    json j;
    j["algorithm"] = c.algorithm == ClusterAlgorithm::KMeansPP ? "kmeans++" : "hac";
    j["m_min"] = c.m_min;
    j["m_max"] = c.m_max;
    j["seed"] = c.seed;
    j["min_cluster_samples"] = c.min_cluster_samples;
    j["intensity_bin_width"] = c.intensity_bin_width;
    j["invert_intensity"] = c.invert_intensity;
    j["z"] = c.z;
    j["region_radius"] = c.region_radius;
    j["region_samples"] = c.region_samples;
    j["region_keep"] = c.region_keep;
    j["beta"] = c.caps.beta;
    j["max_streams"] = c.caps.max_streams;
    j["max_pipelining"] = c.caps.max_pipelining;
    j["query_warn_distance"] = c.query_warn_distance;
    if (c.feature_bounds) {
        j["feature_bounds"] = {{"mins", vector_to_json(c.feature_bounds->mins)},
                               {"maxs", vector_to_json(c.feature_bounds->maxs)}};
    } else {
        j["feature_bounds"] = nullptr;
    }
    return j;
}

OfflineConfig config_from_json(const json& j) {
    OfflineConfig c;
    const std::string alg = j.at("algorithm").get<std::string>();
    if (alg == "kmeans++") c.algorithm = ClusterAlgorithm::KMeansPP;
    else if (alg == "hac") c.algorithm = ClusterAlgorithm::Hac;
    else throw FormatError("unknown clustering algorithm '" + alg + "'");
    c.m_min = j.at("m_min").get<int>();
    c.m_max = j.at("m_max").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.min_cluster_samples = j.at("min_cluster_samples").get<int>();
    c.intensity_bin_width = j.at("intensity_bin_width").get<double>();
    c.invert_intensity = j.at("invert_intensity").get<bool>();
    c.z = j.at("z").get<double>();
    c.region_radius = j.at("region_radius").get<int>();
    c.region_samples = j.at("region_samples").get<int>();
    c.region_keep = j.at("region_keep").get<int>();
    c.caps.beta = j.at("beta").get<int>();
    c.caps.max_streams = j.at("max_streams").get<int>();
    c.caps.max_pipelining = j.at("max_pipelining").get<int>();
    c.query_warn_distance = j.at("query_warn_distance").get<double>();
    if (!j.at("feature_bounds").is_null()) {
        FeatureSchema b;
        b.mins = vector_from_json(j.at("feature_bounds").at("mins"));
        b.maxs = vector_from_json(j.at("feature_bounds").at("maxs"));
        c.feature_bounds = std::move(b);
    }
    return c;
}

json surface_to_json(const SurfaceModel& s) {
    json j;
    j["intensity"] = s.intensity;
    j["p_axis"] = vector_to_json(s.family.p_axis());
    j["cc_axis"] = vector_to_json(s.family.cc_axis());
    j["slices"] = json::array();
    for (const auto& slice : s.family.slices()) {
        json sl;
        sl["pp_value"] = slice.pp_value;
        sl["grid"] = matrix_to_json(slice.patch.values());
        sl["node_derivatives"] = {{"d1", matrix_to_json(slice.patch.deriv_x_nodes())},
                                  {"d2", matrix_to_json(slice.patch.deriv_y_nodes())},
                                  {"d12", matrix_to_json(slice.patch.deriv_xy_nodes())}};
        sl["observed"] = imatrix_to_json(slice.observed);
        j["slices"].push_back(std::move(sl));
    }
    json conf;
    conf["z"] = s.confidence.z;
    conf["pooled_sigma"] = s.confidence.pooled_sigma;
    conf["points"] = json::array();
    for (const auto& [pt, st] : s.confidence.stats) {
        json p = theta_to_json(pt);
        p["n"] = st.n;
        p["mu"] = st.mean;
        p["m2"] = st.m2;
        p["sigma"] = st.n >= 2 ? std::sqrt(st.variance()) : s.confidence.pooled_sigma;
        conf["points"].push_back(std::move(p));
    }
    j["confidence"] = std::move(conf);
    json mx;
    mx["global"] = theta_to_json(s.maxima.global.at);
    mx["global"]["value"] = s.maxima.global.value;
    mx["global"]["certified"] = s.maxima.global.certified;
    mx["local"] = json::array();
    for (const auto& m : s.maxima.local) {
        json e = theta_to_json(m.at);
        e["value"] = m.value;
        e["certified"] = m.certified;
        mx["local"].push_back(std::move(e));
    }
    j["maxima"] = std::move(mx);
    return j;
}

SurfaceModel surface_from_json(const json& j) {
    SurfaceModel s;
    s.intensity = j.at("intensity").get<double>();
    const Eigen::VectorXd p_axis = vector_from_json(j.at("p_axis"));
    const Eigen::VectorXd cc_axis = vector_from_json(j.at("cc_axis"));
    std::vector<SurfaceSlice> slices;
    for (const auto& sl : j.at("slices")) {
        SurfaceSlice slice;
        slice.pp_value = sl.at("pp_value").get<double>();
        const auto& nd = sl.at("node_derivatives");
        slice.patch = BicubicGrid::from_derivatives(
            p_axis, cc_axis, matrix_from_json(sl.at("grid")), matrix_from_json(nd.at("d1")),
            matrix_from_json(nd.at("d2")), matrix_from_json(nd.at("d12")));
        slice.observed = imatrix_from_json(sl.at("observed"));
        slices.push_back(std::move(slice));
    }
    s.family = SurfaceFamily(std::move(slices));

    const auto& conf = j.at("confidence");
    LatticeStats stats;
    for (const auto& p : conf.at("points")) {
        PointStats st;
        st.n = p.at("n").get<std::int64_t>();
        st.mean = p.at("mu").get<double>();
        st.m2 = p.at("m2").get<double>();
        stats[theta_from_json(p)] = st;
    }
    s.confidence = fit_confidence(std::move(stats), conf.at("z").get<double>());

    const auto& mx = j.at("maxima");
    s.maxima.global.at = theta_from_json(mx.at("global"));
    s.maxima.global.value = mx.at("global").at("value").get<double>();
    s.maxima.global.certified = mx.at("global").at("certified").get<bool>();
    for (const auto& e : mx.at("local"))
        s.maxima.local.push_back(
            {theta_from_json(e), e.at("value").get<double>(), e.at("certified").get<bool>()});
    return s;
}

json points_to_json(const std::vector<ParameterPoint>& pts) {
    json a = json::array();
    for (const auto& t : pts) a.push_back(theta_to_json(t));
    return a;
}

std::vector<ParameterPoint> points_from_json(const json& a) {
    std::vector<ParameterPoint> out;
    for (const auto& e : a) out.push_back(theta_from_json(e));
    return out;
}

} // namespace

std::string kb_to_json(const KnowledgeBase& kb) {
    json j;
    j["version"] = kVersion;
    j["config_fingerprint"] = kb.fingerprint();
    j["config"] = config_to_json(kb.config);
    j["feature_schema"] = {{"mins", vector_to_json(kb.schema.mins)},
                           {"maxs", vector_to_json(kb.schema.maxs)}};
    j["built_at"] = kb.built_at;
    j["entries"] = json::array();
    for (const auto& e : kb.entries) {
        json entry;
        entry["cluster_id"] = e.cluster_id;
        entry["centroid"] = vector_to_json(e.centroid);
        entry["size"] = e.size;
        entry["surfaces"] = json::array();
        for (const auto& s : e.surfaces) entry["surfaces"].push_back(surface_to_json(s));
        entry["region"] = {{"maxima_pts", points_to_json(e.region.maxima_pts)},
                           {"discrimination_pts", points_to_json(e.region.discrimination_pts)}};
        j["entries"].push_back(std::move(entry));
    }
    return j.dump(2) + "\n";
}

KnowledgeBase kb_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError("knowledge base parse error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }

    const std::string version = j.at("version").get<std::string>();
    if (version != kVersion)
        throw FormatError("unsupported knowledge base version '" + version + "' (expected '" +
                          kVersion + "')");

    KnowledgeBase kb;
    kb.config = config_from_json(j.at("config"));
    const std::string stored = j.at("config_fingerprint").get<std::string>();
    if (stored != kb.fingerprint())
        throw FormatError("stored fingerprint " + stored + " does not match config fingerprint " +
                          kb.fingerprint());
    kb.schema.mins = vector_from_json(j.at("feature_schema").at("mins"));
    kb.schema.maxs = vector_from_json(j.at("feature_schema").at("maxs"));
    kb.built_at = j.at("built_at").get<double>();
    for (const auto& entry : j.at("entries")) {
        ClusterKnowledge e;
        e.cluster_id = entry.at("cluster_id").get<int>();
        e.centroid = vector_from_json(entry.at("centroid"));
        e.size = entry.at("size").get<std::int64_t>();
        for (const auto& s : entry.at("surfaces")) e.surfaces.push_back(surface_from_json(s));
        e.region.maxima_pts = points_from_json(entry.at("region").at("maxima_pts"));
        e.region.discrimination_pts = points_from_json(entry.at("region").at("discrimination_pts"));
        kb.entries.push_back(std::move(e));
    }
    return kb;
}

void save_kb(const KnowledgeBase& kb, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open path for writing: " + path);
    out << kb_to_json(kb);
    if (!out) throw FormatError("write failed: " + path);
}

KnowledgeBase load_kb(const std::string& path, const std::string& expected_fingerprint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open knowledge base: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    KnowledgeBase kb = kb_from_json(buf.str());
    if (!expected_fingerprint.empty() && kb.fingerprint() != expected_fingerprint)
        throw FormatError("fingerprint mismatch: file has " + kb.fingerprint() +
                          ", expected " + expected_fingerprint);
    return kb;
}

} // namespace flowtune
