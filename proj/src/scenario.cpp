#include "flowtune/scenario.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace flowtune {

using nlohmann::json;

namespace {

SimConfig sim_from_json(const json& j) {
    SimConfig c;
    c.bandwidth = j.value("bandwidth_mbps", c.bandwidth);
    c.rtt = j.value("rtt_ms", c.rtt);
    c.caps.beta = j.value("beta", c.caps.beta);
    c.caps.max_streams = j.value("max_streams", c.caps.max_streams);
    c.caps.max_pipelining = j.value("max_pipelining", c.caps.max_pipelining);
    c.knee = j.value("knee_streams", c.knee);
    c.pipeline_c0 = j.value("pipeline_c0", c.pipeline_c0);
    c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
    c.systematic_ripple = j.value("systematic_ripple", c.systematic_ripple);
    c.seed = j.value("seed", c.seed);
    if (j.contains("load_timeline")) {
        for (const auto& pt : j.at("load_timeline")) {
            if (!pt.is_array() || pt.size() != 2)
                throw FormatError("load_timeline entries must be [time, load] pairs");
            c.load_timeline.push_back({pt[0].get<double>(), pt[1].get<double>()});
        }
        for (const auto& pt : c.load_timeline)
            if (pt.load < 0 || pt.load > 1) throw FormatError("load values must lie in [0, 1]");
    }
    if (c.bandwidth <= 0) throw FormatError("bandwidth must be positive");
    return c;
}

TransferRequest request_from_json(const json& j, const SimConfig& sim) {
    TransferRequest r;
    r.src_endpoint = j.value("src", "src-host");
    r.dst_endpoint = j.value("dst", "dst-host");
    r.rtt = j.value("rtt_ms", sim.rtt);
    r.bandwidth = j.value("bandwidth_mbps", sim.bandwidth);
    if (j.contains("sizes")) {
        for (const auto& s : j.at("sizes")) r.dataset.push_back(s.get<double>());
    } else if (j.contains("files")) {
        const auto& f = j.at("files");
        const std::int64_t count = f.at("count").get<std::int64_t>();
        const double size = f.at("size_bytes").get<double>();
        r.dataset.assign(static_cast<std::size_t>(count), size);
    } else {
        throw FormatError("request needs either 'sizes' or 'files'");
    }
    if (r.dataset.empty() || r.total_bytes() <= 0)
        throw FormatError("request dataset must be nonempty with positive total size");
    r.num_files = static_cast<std::int64_t>(r.dataset.size());
    r.avg_file_size = r.total_bytes() / static_cast<double>(r.num_files);
    return r;
}

LogDesign design_from_json(const json& j, const SimConfig& sim) {
    LogDesign d;
    d.avg_file_size_bytes = j.value("avg_file_size_bytes", d.avg_file_size_bytes);
    d.num_files = j.value("num_files", d.num_files);
    d.src = j.value("src", d.src);
    d.dst = j.value("dst", d.dst);
    d.start_time = j.value("start_time", d.start_time);
    d.slot_seconds = j.value("slot_seconds", d.slot_seconds);

    if (j.contains("cells")) {
        for (const auto& c : j.at("cells")) {
            DesignCell cell;
            cell.theta = {c.at("cc").get<int>(), c.at("p").get<int>(), c.at("pp").get<int>()};
            cell.load = c.value("load", 0.0);
            cell.reps = c.value("reps", 1);
            d.cells.push_back(cell);
        }
    } else {
        std::vector<double> loads{0.0};
        if (j.contains("loads")) {
            loads.clear();
            for (const auto& l : j.at("loads")) loads.push_back(l.get<double>());
        }
        const int reps = j.value("reps", 1);
        d.cells = full_lattice_design(sim.caps, loads, reps).cells;
    }
    if (d.cells.empty()) throw FormatError("design has no measurement cells");
    return d;
}

} // namespace

Scenario scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError("scenario parse error at byte " + std::to_string(e.byte) + ": " +
                          e.what());
    }
    Scenario s;
    if (j.contains("sim")) s.sim = sim_from_json(j.at("sim"));
    if (j.contains("request")) s.request = request_from_json(j.at("request"), s.sim);
    if (j.contains("design")) s.design = design_from_json(j.at("design"), s.sim);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open scenario: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return scenario_from_json_text(buf.str());
}

} // namespace flowtune
