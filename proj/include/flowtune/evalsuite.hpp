#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowtune/kbstore.hpp"
#include "flowtune/netsim.hpp"
#include "flowtune/tuner.hpp"

namespace flowtune {

// Shared scenario kit for the evaluation suites and the acceptance checks.

SimConfig standard_sim(std::uint64_t seed, double noise_sigma = 0.03);
OfflineConfig standard_offline(std::uint64_t seed);

// Training loads spaced on the intensity-bin grid; eta surfaces result.
std::vector<double> training_loads(int eta);

// Full-lattice training log under the given loads, then the offline build.
KnowledgeBase training_kb(const SimConfig& sim, const std::vector<double>& loads, int reps,
                          double avg_file_size_bytes, std::int64_t num_files,
                          const OfflineConfig& offline);

TransferRequest standard_request(double avg_file_size_bytes, std::int64_t num_files,
                                 double bandwidth_mbps = 1000, double rtt_ms = 10);

// Brute-force optimum of the simulator closed form over the feasible lattice.
double closed_form_optimum(const SimConfig& sim, double load, double avg_file_size_bytes);

struct ConvergenceTrial {
    int samples_used = 0;
    int eta = 0;
    double accuracy_pct = 0;
    bool committed_on_match = false; // committed surface tag equals the true load's tag
};

// One seeded stationary run whose true load matches a KB surface.
ConvergenceTrial convergence_trial(std::uint64_t seed, int eta, int max_samples = 3);

struct FairnessTrial {
    std::vector<double> per_agent_mbps;
    double mean = 0;
    double stddev = 0;
    double cov = 0;         // coefficient of variation
    double utilization = 0; // aggregate achieved / available
};

FairnessTrial fairness_trial(std::uint64_t seed, int agents);

struct SurfaceComparison {
    double spline_acc = 0;
    double cubic_acc = 0;
    double quadratic_acc = 0;
};

// Holdout accuracy of the interpolated surface versus the two polynomial
// baselines on one small-file log (5% noise, configuration-dependent ripple
// on, three training repetitions plus one held-out repetition per lattice
// point).
SurfaceComparison surface_comparison_trial(std::uint64_t seed);

struct SuiteFile {
    std::string name;
    std::string content;
};

std::vector<std::string> suite_names();
// Runs one named suite and returns its CSV tables.
std::vector<SuiteFile> run_suite(const std::string& suite, std::uint64_t seed);

} // namespace flowtune
