#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowtune/knowledge.hpp"
#include "flowtune/netsim.hpp"
#include "flowtune/types.hpp"

namespace flowtune {

struct TunerConfig {
    double sample_fraction = 0.05; // bytes per probe chunk, relative to total
    int max_samples = 3;
    int convergence_streak = 1;    // in-band probes needed to commit
    int monitor_window = 3;
    double remainder_chunk_fraction = 0.05; // monitoring cadence
    double min_chunk_bytes = 1;
    double improve_eps = 0.01; // additive baseline: relative gain to keep climbing
    int additive_step = 1;
};

// Dataset split for probing: up to max_samples file groups, each packed
// greedily toward sample_fraction of the total bytes, plus the remainder.
struct ChunkPlan {
    std::vector<std::vector<double>> sample_chunks; // file sizes per chunk
    std::vector<double> remainder;

    double chunk_bytes(std::size_t i) const;
    double remainder_bytes() const;
};

ChunkPlan plan_chunks(const TransferRequest& request, double sample_fraction, int max_samples,
                      double min_chunk_bytes = 1);

struct ProbeChoice {
    std::size_t surface_index = 0;
    ParameterPoint theta;
    double predicted = 0;
};

// The first probe targets the precomputed argmax of the surface with the
// median load-intensity tag (lower median on even counts).
ProbeChoice first_probe(const ClusterKnowledge& knowledge);

enum class StepAction { Keep, Switch, Committed };

struct StepResult {
    StepAction action = StepAction::Keep;
    std::size_t surface_index = 0;
    ParameterPoint theta;
    double predicted = 0;
    bool degraded = false; // committed with the candidate window exhausted
};

// Binary-search state over the intensity-sorted surface list.
struct TunerState {
    const ClusterKnowledge* knowledge = nullptr;
    std::size_t lo = 0, hi = 0, active = 0;
    int samples_used = 0;
    int keep_streak = 0;
    int switch_count = 0;
    ParameterPoint theta;
    double predicted = 0;
};

TunerState init_tuner(const ClusterKnowledge& knowledge);

// Decides from one probe result: in-band keeps (and commits once the streak
// or the probe budget is reached); out-of-band discards the half of the
// window on the wrong side of the active surface and jumps to the candidate
// whose predicted maximum is closest to the achieved value.
StepResult tuner_step(TunerState& state, double achieved, const TunerConfig& cfg);

enum class MonitorVerdict { Stable, Deviated };

// Deviated only when every measurement in the window falls outside the band
// on the same side.
MonitorVerdict monitor(const std::vector<double>& window, double band_lo, double band_hi);

struct ChunkOutcome {
    std::string kind; // "probe" | "data"
    double bytes = 0;
    ParameterPoint theta;
    int surface_index = -1;
    double achieved_mbps = 0;
    double elapsed_s = 0;
    std::string decision; // keep/switch/commit/retune/...
};

// One stretch of the transfer driven by a single committed surface.
struct CommitPhase {
    int surface_index = -1;
    ParameterPoint theta;
    double predicted = 0;
    double bytes = 0;
    double seconds = 0;

    double mean_throughput() const { return seconds > 0 ? bytes * 8.0 / 1e6 / seconds : 0.0; }
};

struct TransferReport {
    std::string tuner;
    bool complete = true;
    bool degraded_confidence = false;
    bool far_query = false;
    int samples_used = 0;
    int switch_count = 0;
    int retune_count = 0;
    int additive_convergence_periods = -1; // additive baseline only
    double total_bytes = 0;
    double wall_seconds = 0;
    double mean_throughput_mbps = 0;
    bool has_prediction = false;
    double predicted_mbps = 0;      // bytes-weighted over committed phases
    double relative_error_pct = 0;  // |achieved - predicted| / predicted, per phase
    double accuracy_pct = 0;        // 100 - relative_error_pct, floored at 0
    std::vector<CommitPhase> phases;
    std::vector<ChunkOutcome> chunks;
};

// The committed-phase accuracy metric; recomputes from report.phases.
double report_accuracy(const TransferReport& report);

std::string report_to_json(const TransferReport& report);
void write_report(const TransferReport& report, const std::string& path);

// Adaptive-sampling transfer session against a shared simulated link,
// advanced one network operation at a time so several sessions can be
// interleaved. run_transfer drives one session to completion.
class TransferSession {
public:
    TransferSession(const TransferRequest& request, const KnowledgeBase& kb, SimNetwork& net,
                    int agent, TunerConfig cfg);

    bool done() const { return done_; }
    void step_once();
    const TransferReport& report() const { return report_; }
    int agent() const { return agent_; }

private:
    void begin_phase(std::size_t surface_index);
    std::pair<double, double> band_at(std::size_t surface_index, const ParameterPoint& t) const;
    void transfer_piece(const char* kind, double bytes, const std::string& decision);
    void finish();

    const KnowledgeBase* kb_;
    SimNetwork* net_;
    int agent_;
    TunerConfig cfg_;
    const ClusterKnowledge* knowledge_ = nullptr;
    ChunkPlan plan_;
    TunerState state_;
    TransferReport report_;

    enum class Stage { Probing, Remainder, Done } stage_ = Stage::Probing;
    std::size_t next_chunk_ = 0;
    double remainder_left_ = 0;
    double piece_bytes_ = 0;
    double last_achieved_ = 0;
    std::vector<double> monitor_window_;
    bool done_ = false;
};

TransferReport run_transfer(const TransferRequest& request, const KnowledgeBase& kb,
                            SimNetwork& net, const TunerConfig& cfg);

// Whole dataset at one fixed parameter point.
TransferReport baseline_static(const TransferRequest& request, const ParameterPoint& theta,
                               SimNetwork& net);

// Starts at (1,1,1) and raises every parameter by one step per period while
// throughput keeps improving; a drop backs off one step and holds.
TransferReport baseline_additive(const TransferRequest& request, SimNetwork& net,
                                 const TunerConfig& cfg);

} // namespace flowtune
