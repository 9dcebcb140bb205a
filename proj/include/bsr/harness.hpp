#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bsr/agent.hpp"
#include "bsr/analysis.hpp"
#include "bsr/config.hpp"
#include "bsr/types.hpp"

namespace bsr::harness {

struct EpisodeRecord {
  long episode = 0;
  int steps = 0;
  double ret = 0.0;
  int context = 0;       // most likely context at episode end
  double omega_entropy = 0.0;
};

struct FlickerRow {
  int session = 0;  // 1-based
  int trial = 0;    // 1-based
  int step = 0;
  double z_diff = 0.0;
};

struct RunArtifacts {
  RunConfig config;
  std::vector<EpisodeRecord> episodes;
  long long total_steps = 0;
  double total_return = 0.0;
  long degenerate_filter_steps = 0;

  struct Forage {
    std::vector<FlickerRow> flicker;
    std::vector<double> session_rho;        // analysed sessions only
    analysis::MeanSem rho;
    std::vector<double> trial_mean_zdiff;   // averaged across analysed sessions
    int skipped_steps = 0;
  };
  std::optional<Forage> forage;

  struct YMazeTrial {
    long episode = 0;
    int type = 0;
    int steps = 0;
    bool success = false;
    Vec start_vec;
  };
  struct YMaze {
    std::vector<YMazeTrial> trials;  // main phase only
    Mat decode;                      // 4x4 row-normalized
    int decode_excluded = 0;
    double blocked_mean_steps = 0.0;
    double open_mean_steps = 0.0;
  };
  std::optional<YMaze> ymaze;

  std::vector<std::pair<long long, double>> reward_curve;  // continuous runs
  std::vector<agents::TabularAgent::FilterTraceRow> filter_trace;
};

RunArtifacts run_experiment(const RunConfig& cfg);
void write_artifacts(const RunArtifacts& artifacts, const std::string& dir);

// Deterministic per-cell seeding: adding sweep cells never perturbs others.
std::uint64_t derive_seed(std::uint64_t base_seed, const std::string& cell_tag, int replicate);

struct SweepSpec {
  Profile profile = Profile::Exp1;
  std::vector<AgentKind> agents;
  std::vector<double> epsilons;  // empty: keep each agent's profile default
  std::vector<double> alphas;    // alpha_sr grid; empty: keep default
  int seeds = 1;
  std::uint64_t base_seed = 1;
  std::string overrides_json;    // optional extra keys per cell
};

struct CellSummary {
  AgentKind agent = AgentKind::Bsr;
  double epsilon = 0.0;
  double alpha_sr = 0.0;
  std::vector<double> total_steps;
  std::vector<double> total_return;
  analysis::MeanSem steps;
  analysis::MeanSem ret;
  std::vector<std::string> failures;
};

struct SweepSummary {
  Profile profile = Profile::Exp1;
  std::vector<CellSummary> cells;
  std::string to_text() const;   // includes best cell per agent
};

SweepSummary sweep(const SweepSpec& spec, int jobs);

// Structured-text report over a set of runs: totals, per-agent aggregation,
// ANOVA across agent groups, Spearman stats for foraging runs.
std::string summarize(const std::vector<const RunArtifacts*>& runs);

// Offline analyses over an artifact directory (CSV files emitted by runs).
void analyze_flicker(const std::string& in_dir, const std::string& out_path);
void analyze_splitter(const std::string& in_dir, const std::string& out_path);
void analyze_summary(const std::string& in_dir, const std::string& out_path);

// Quick self-checks of the independent test oracles (analytic SR, conjugate
// posterior); returns the number of failed checks.
int oracle_check(std::string* report);

void parallel_run(std::vector<std::function<void()>> tasks, int jobs);

}  // namespace bsr::harness
