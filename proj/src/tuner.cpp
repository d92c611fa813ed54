#include "flowtune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace flowtune {

using nlohmann::json;

double ChunkPlan::chunk_bytes(std::size_t i) const {
    double s = 0;
    for (double f : sample_chunks[i]) s += f;
    return s;
}

double ChunkPlan::remainder_bytes() const {
    double s = 0;
    for (double f : remainder) s += f;
    return s;
}

ChunkPlan plan_chunks(const TransferRequest& request, double sample_fraction, int max_samples,
                      double min_chunk_bytes) {
    if (request.dataset.empty()) throw std::invalid_argument("empty dataset");
    ChunkPlan plan;
    const std::vector<double>& files = request.dataset;

    if (files.size() < static_cast<std::size_t>(max_samples)) {
        for (double f : files) plan.sample_chunks.push_back({f});
        return plan;
    }

    const double target = std::max(min_chunk_bytes, sample_fraction * request.total_bytes());
    std::size_t i = 0;
    for (int c = 0; c < max_samples && i < files.size(); ++c) {
        std::vector<double> chunk{files[i]};
        double bytes = files[i];
        ++i;
        while (i < files.size()) {
            const double with = bytes + files[i];
            const bool under_min = bytes < min_chunk_bytes;
            if (!under_min && std::abs(with - target) > std::abs(bytes - target)) break;
            chunk.push_back(files[i]);
            bytes = with;
            ++i;
        }
        plan.sample_chunks.push_back(std::move(chunk));
    }
    plan.remainder.assign(files.begin() + static_cast<std::ptrdiff_t>(i), files.end());
    return plan;
}

ProbeChoice first_probe(const ClusterKnowledge& knowledge) {
    if (knowledge.surfaces.empty()) throw std::invalid_argument("no surfaces in cluster");
    ProbeChoice c;
    c.surface_index = (knowledge.surfaces.size() - 1) / 2; // lower median
    const auto& s = knowledge.surfaces[c.surface_index];
    c.theta = s.maxima.global.at;
    c.predicted = s.maxima.global.value;
    return c;
}

TunerState init_tuner(const ClusterKnowledge& knowledge) {
    TunerState st;
    st.knowledge = &knowledge;
    st.lo = 0;
    st.hi = knowledge.surfaces.size() - 1;
    const ProbeChoice c = first_probe(knowledge);
    st.active = c.surface_index;
    st.theta = c.theta;
    st.predicted = c.predicted;
    return st;
}

namespace {

double surface_prediction(const ClusterKnowledge& k, std::size_t i) {
    return k.surfaces[i].maxima.global.value;
}

std::size_t closest_prediction(const ClusterKnowledge& k, std::size_t lo, std::size_t hi,
                               double achieved) {
    std::size_t best = lo;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = lo; i <= hi; ++i) {
        const double d = std::abs(surface_prediction(k, i) - achieved);
        if (d < gap) {
            gap = d;
            best = i;
        }
    }
    return best;
}

// Confidence band of surface i evaluated at t; lattice points never observed
// fall back to the interpolated value with the pooled spread.
std::pair<double, double> surface_band(const SurfaceModel& s, const ParameterPoint& t) {
    double mu, sigma;
    if (s.confidence.covers(t)) {
        mu = s.confidence.mu(t);
        sigma = s.confidence.sigma(t);
    } else {
        mu = s.family.eval(t);
        sigma = s.confidence.pooled_sigma;
    }
    return {mu - s.confidence.z * sigma, mu + s.confidence.z * sigma};
}

} // namespace

StepResult tuner_step(TunerState& state, double achieved, const TunerConfig& cfg) {
    const ClusterKnowledge& k = *state.knowledge;
    const auto [band_lo, band_hi] = surface_band(k.surfaces[state.active], state.theta);

    auto committed = [&](std::size_t index, bool degraded) {
        StepResult r;
        r.action = StepAction::Committed;
        r.surface_index = index;
        r.theta = k.surfaces[index].maxima.global.at;
        r.predicted = surface_prediction(k, index);
        r.degraded = degraded;
        state.active = index;
        state.theta = r.theta;
        state.predicted = r.predicted;
        return r;
    };

    if (achieved >= band_lo && achieved <= band_hi) {
        state.keep_streak += 1;
        if (state.keep_streak >= cfg.convergence_streak || state.samples_used >= cfg.max_samples)
            return committed(state.active, false);
        StepResult r;
        r.action = StepAction::Keep;
        r.surface_index = state.active;
        r.theta = state.theta;
        r.predicted = state.predicted;
        return r;
    }

    state.keep_streak = 0;
    if (state.samples_used >= cfg.max_samples)
        return committed(closest_prediction(k, state.lo, state.hi, achieved), false);

    // Surfaces are sorted by intensity tag; predictions run monotonically
    // along the list. Keep the side of the window whose predictions lie on
    // the achieved side of the active surface, then trim to half the window
    // by dropping the candidates whose predictions are farthest from the
    // achieved value.
    const bool above = achieved > band_hi;
    const bool lo_side_predicts_higher =
        surface_prediction(k, state.lo) >= surface_prediction(k, state.hi);
    const bool go_lo = (above == lo_side_predicts_higher);

    const std::size_t old_lo = state.lo, old_hi = state.hi;
    const std::size_t old_size = old_hi - old_lo + 1;
    bool empty = false;
    if (go_lo) {
        if (state.active == state.lo) empty = true;
        else state.hi = state.active - 1;
    } else {
        if (state.active == state.hi) empty = true;
        else state.lo = state.active + 1;
    }
    if (empty) return committed(closest_prediction(k, old_lo, old_hi, achieved), true);

    const std::size_t cap = (old_size + 1) / 2;
    while (state.hi - state.lo + 1 > cap) {
        const double d_lo = std::abs(surface_prediction(k, state.lo) - achieved);
        const double d_hi = std::abs(surface_prediction(k, state.hi) - achieved);
        if (d_lo >= d_hi) state.lo += 1;
        else state.hi -= 1;
    }

    state.active = closest_prediction(k, state.lo, state.hi, achieved);
    state.theta = k.surfaces[state.active].maxima.global.at;
    state.predicted = surface_prediction(k, state.active);
    state.switch_count += 1;

    StepResult r;
    r.action = StepAction::Switch;
    r.surface_index = state.active;
    r.theta = state.theta;
    r.predicted = state.predicted;
    return r;
}

MonitorVerdict monitor(const std::vector<double>& window, double band_lo, double band_hi) {
    if (window.empty()) return MonitorVerdict::Stable;
    const bool all_above = std::all_of(window.begin(), window.end(),
                                       [&](double v) { return v > band_hi; });
    const bool all_below = std::all_of(window.begin(), window.end(),
                                       [&](double v) { return v < band_lo; });
    return (all_above || all_below) ? MonitorVerdict::Deviated : MonitorVerdict::Stable;
}

double report_accuracy(const TransferReport& report) {
    double bytes = 0, weighted = 0;
    for (const auto& ph : report.phases) {
        if (ph.predicted <= 0 || ph.bytes <= 0) continue;
        weighted += ph.bytes * std::abs(ph.mean_throughput() - ph.predicted) / ph.predicted;
        bytes += ph.bytes;
    }
    if (bytes <= 0) return 0;
    return std::max(0.0, 100.0 * (1.0 - weighted / bytes));
}

// --------------------------------------------------------------------------
// TransferSession

TransferSession::TransferSession(const TransferRequest& request, const KnowledgeBase& kb,
                                 SimNetwork& net, int agent, TunerConfig cfg)
    : kb_(&kb), net_(&net), agent_(agent), cfg_(cfg) {
    const QueryResult q = query_kb(kb, request);
    knowledge_ = q.knowledge;
    report_.tuner = "asm";
    report_.far_query = q.far;
    plan_ = plan_chunks(request, cfg_.sample_fraction, cfg_.max_samples, cfg_.min_chunk_bytes);
    state_ = init_tuner(*knowledge_);
    piece_bytes_ = std::max(cfg_.min_chunk_bytes,
                            cfg_.remainder_chunk_fraction * request.total_bytes());
    remainder_left_ = plan_.remainder_bytes();
}

std::pair<double, double> TransferSession::band_at(std::size_t surface_index,
                                                   const ParameterPoint& t) const {
    return surface_band(knowledge_->surfaces[surface_index], t);
}

void TransferSession::transfer_piece(const char* kind, double bytes, const std::string& decision) {
    const auto out = net_->transfer(agent_, state_.theta, bytes);
    last_achieved_ = out.throughput_mbps;
    report_.total_bytes += bytes;
    report_.wall_seconds += out.elapsed_s;
    ChunkOutcome c;
    c.kind = kind;
    c.bytes = bytes;
    c.theta = state_.theta;
    c.surface_index = static_cast<int>(state_.active);
    c.achieved_mbps = out.throughput_mbps;
    c.elapsed_s = out.elapsed_s;
    c.decision = decision;
    report_.chunks.push_back(std::move(c));
}

void TransferSession::begin_phase(std::size_t surface_index) {
    CommitPhase ph;
    ph.surface_index = static_cast<int>(surface_index);
    ph.theta = knowledge_->surfaces[surface_index].maxima.global.at;
    ph.predicted = knowledge_->surfaces[surface_index].maxima.global.value;
    report_.phases.push_back(ph);
    state_.active = surface_index;
    state_.theta = ph.theta;
    state_.predicted = ph.predicted;
    monitor_window_.clear();
}

void TransferSession::step_once() {
    if (done_) return;

    if (stage_ == Stage::Probing) {
        const double bytes = plan_.chunk_bytes(next_chunk_);
        ++next_chunk_;
        state_.samples_used += 1;
        report_.samples_used = state_.samples_used;
        transfer_piece("probe", bytes, "");
        const StepResult r = tuner_step(state_, last_achieved_, cfg_);
        auto& decision = report_.chunks.back().decision;
        switch (r.action) {
            case StepAction::Keep: decision = "keep"; break;
            case StepAction::Switch: decision = "switch"; break;
            case StepAction::Committed: decision = "commit"; break;
        }
        report_.switch_count = state_.switch_count;
        const bool out_of_chunks = next_chunk_ >= plan_.sample_chunks.size();
        if (r.action == StepAction::Committed || out_of_chunks) {
            report_.degraded_confidence = report_.degraded_confidence || r.degraded;
            // Unprobed sample chunks join the remainder.
            for (std::size_t k = next_chunk_; k < plan_.sample_chunks.size(); ++k)
                remainder_left_ += plan_.chunk_bytes(k);
            begin_phase(state_.active);
            stage_ = remainder_left_ > 0 ? Stage::Remainder : Stage::Done;
            if (stage_ == Stage::Done) finish();
        }
        return;
    }

    if (stage_ == Stage::Remainder) {
        const double bytes = std::min(piece_bytes_, remainder_left_);
        transfer_piece("data", bytes, "");
        remainder_left_ -= bytes;
        CommitPhase& ph = report_.phases.back();
        ph.bytes += bytes;
        ph.seconds += report_.chunks.back().elapsed_s;

        monitor_window_.push_back(last_achieved_);
        if (monitor_window_.size() > static_cast<std::size_t>(cfg_.monitor_window))
            monitor_window_.erase(monitor_window_.begin());
        if (monitor_window_.size() == static_cast<std::size_t>(cfg_.monitor_window)) {
            const auto [lo, hi] = band_at(state_.active, state_.theta);
            if (monitor(monitor_window_, lo, hi) == MonitorVerdict::Deviated) {
                const std::size_t pick = closest_prediction(
                    *knowledge_, 0, knowledge_->surfaces.size() - 1, last_achieved_);
                if (pick != state_.active) {
                    report_.retune_count += 1;
                    report_.chunks.back().decision = "retune";
                    begin_phase(pick);
                } else {
                    // Persistent drift that still matches this surface best;
                    // stay put and restart the window.
                    monitor_window_.clear();
                }
            }
        }
        if (remainder_left_ <= 0) {
            stage_ = Stage::Done;
            finish();
        }
        return;
    }
}

void TransferSession::finish() {
    report_.mean_throughput_mbps =
        report_.wall_seconds > 0 ? report_.total_bytes * 8.0 / 1e6 / report_.wall_seconds : 0.0;

    double bytes = 0, weighted_err = 0, weighted_pred = 0;
    for (const auto& ph : report_.phases) {
        if (ph.predicted <= 0 || ph.bytes <= 0) continue;
        weighted_err += ph.bytes * std::abs(ph.mean_throughput() - ph.predicted) / ph.predicted;
        weighted_pred += ph.bytes * ph.predicted;
        bytes += ph.bytes;
    }
    if (bytes > 0) {
        report_.has_prediction = true;
        report_.predicted_mbps = weighted_pred / bytes;
        report_.relative_error_pct = 100.0 * weighted_err / bytes;
    } else if (!report_.phases.empty()) {
        // Probes only: score the last probe against the committed prediction.
        const double pred = report_.phases.back().predicted;
        if (pred > 0) {
            report_.has_prediction = true;
            report_.predicted_mbps = pred;
            report_.relative_error_pct = 100.0 * std::abs(last_achieved_ - pred) / pred;
        }
    }
    report_.accuracy_pct =
        report_.has_prediction ? std::max(0.0, 100.0 - report_.relative_error_pct) : 0.0;
    done_ = true;
}

TransferReport run_transfer(const TransferRequest& request, const KnowledgeBase& kb,
                            SimNetwork& net, const TunerConfig& cfg) {
    const int agent = net.add_agent(request.src_endpoint + ">" + request.dst_endpoint,
                                    request.avg_file_size);
    TransferSession session(request, kb, net, agent, cfg);
    while (!session.done()) session.step_once();
    net.release(agent);
    return session.report();
}

// --------------------------------------------------------------------------
// Baselines

TransferReport baseline_static(const TransferRequest& request, const ParameterPoint& theta,
                               SimNetwork& net) {
    if (!theta.feasible(net.config().caps))
        throw std::invalid_argument("static parameter point violates caps");
    TransferReport rep;
    rep.tuner = "static";
    const int agent = net.add_agent("static", request.avg_file_size);
    const double total = request.total_bytes();
    const auto out = net.transfer(agent, theta, total);
    net.release(agent);
    rep.total_bytes = total;
    rep.wall_seconds = out.elapsed_s;
    rep.mean_throughput_mbps = out.throughput_mbps;
    rep.chunks.push_back({"data", total, theta, -1, out.throughput_mbps, out.elapsed_s, ""});
    return rep;
}

namespace {

ParameterPoint additive_up(const ParameterPoint& t, int step, const ParameterCaps& caps) {
    ParameterPoint n = t;
    if (n.cc + step <= caps.beta && (n.cc + step) * n.p <= caps.max_streams) n.cc += step;
    if (n.p + step <= caps.beta && n.cc * (n.p + step) <= caps.max_streams) n.p += step;
    if (n.pp + step <= std::min(caps.beta, caps.max_pipelining)) n.pp += step;
    return n;
}

} // namespace

TransferReport baseline_additive(const TransferRequest& request, SimNetwork& net,
                                 const TunerConfig& cfg) {
    TransferReport rep;
    rep.tuner = "additive";
    const int agent = net.add_agent("additive", request.avg_file_size);
    const ParameterCaps& caps = net.config().caps;

    const double total = request.total_bytes();
    const double piece = std::max(cfg.min_chunk_bytes, cfg.remainder_chunk_fraction * total);
    double left = total;

    ParameterPoint theta{1, 1, 1};
    ParameterPoint prev_theta = theta;
    bool holding = false;
    double prev_achieved = -1;
    int period = 0;

    while (left > 0) {
        const double bytes = std::min(piece, left);
        const auto out = net.transfer(agent, theta, bytes);
        left -= bytes;
        ++period;
        rep.total_bytes += bytes;
        rep.wall_seconds += out.elapsed_s;
        rep.chunks.push_back(
            {"data", bytes, theta, -1, out.throughput_mbps, out.elapsed_s, holding ? "hold" : ""});

        if (!holding) {
            if (prev_achieved < 0) {
                prev_theta = theta;
                theta = additive_up(theta, cfg.additive_step, caps);
                rep.chunks.back().decision = "step";
            } else {
                const double rel = (out.throughput_mbps - prev_achieved) / prev_achieved;
                if (rel >= cfg.improve_eps) {
                    const ParameterPoint next = additive_up(theta, cfg.additive_step, caps);
                    if (next == theta) {
                        holding = true;
                        rep.additive_convergence_periods = period;
                        rep.chunks.back().decision = "hold";
                    } else {
                        prev_theta = theta;
                        theta = next;
                        rep.chunks.back().decision = "step";
                    }
                } else if (rel <= -cfg.improve_eps) {
                    theta = prev_theta; // back off one step
                    holding = true;
                    rep.additive_convergence_periods = period;
                    rep.chunks.back().decision = "backoff";
                } else {
                    holding = true;
                    rep.additive_convergence_periods = period;
                    rep.chunks.back().decision = "hold";
                }
            }
            prev_achieved = out.throughput_mbps;
        }
    }
    if (rep.additive_convergence_periods < 0) rep.additive_convergence_periods = period;
    net.release(agent);
    rep.mean_throughput_mbps =
        rep.wall_seconds > 0 ? rep.total_bytes * 8.0 / 1e6 / rep.wall_seconds : 0.0;
    return rep;
}

// --------------------------------------------------------------------------
// Report serialization

std::string report_to_json(const TransferReport& r) {
    json j;
    j["tuner"] = r.tuner;
    j["complete"] = r.complete;
    j["degraded_confidence"] = r.degraded_confidence;
    j["far_query"] = r.far_query;
    j["samples_used"] = r.samples_used;
    j["switch_count"] = r.switch_count;
    j["retune_count"] = r.retune_count;
    if (r.additive_convergence_periods >= 0)
        j["additive_convergence_periods"] = r.additive_convergence_periods;
    j["total_bytes"] = r.total_bytes;
    j["wall_seconds"] = r.wall_seconds;
    j["mean_throughput_mbps"] = r.mean_throughput_mbps;
    if (r.has_prediction) {
        j["predicted_mbps"] = r.predicted_mbps;
        j["relative_error_pct"] = r.relative_error_pct;
        j["accuracy_pct"] = r.accuracy_pct;
    }
    j["phases"] = json::array();
    for (const auto& ph : r.phases) {
        json p;
        p["surface_index"] = ph.surface_index;
        p["theta"] = {{"cc", ph.theta.cc}, {"p", ph.theta.p}, {"pp", ph.theta.pp}};
        p["predicted_mbps"] = ph.predicted;
        p["bytes"] = ph.bytes;
        p["seconds"] = ph.seconds;
        p["mean_throughput_mbps"] = ph.mean_throughput();
        j["phases"].push_back(std::move(p));
    }
    j["chunks"] = json::array();
    for (const auto& c : r.chunks) {
        json p;
        p["kind"] = c.kind;
        p["bytes"] = c.bytes;
        p["theta"] = {{"cc", c.theta.cc}, {"p", c.theta.p}, {"pp", c.theta.pp}};
        p["surface_index"] = c.surface_index;
        p["achieved_mbps"] = c.achieved_mbps;
        p["elapsed_s"] = c.elapsed_s;
        p["decision"] = c.decision;
        j["chunks"].push_back(std::move(p));
    }
    return j.dump(2) + "\n";
}

void write_report(const TransferReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open path for writing: " + path);
    out << report_to_json(report);
    if (!out) throw FormatError("write failed: " + path);
}

} // namespace flowtune
