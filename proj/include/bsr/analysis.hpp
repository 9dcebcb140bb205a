#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "bsr/sr.hpp"
#include "bsr/types.hpp"

namespace bsr::analysis {

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const Vec& x, const Vec& y);
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

// Spearman rank correlation with average ranks for ties; nullopt when either
// input is constant.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

// One-way ANOVA F statistic; +infinity sentinel when the within-group
// variance is exactly zero but groups differ.
double one_way_anova_f(const std::vector<std::vector<double>>& groups);

struct MeanSem {
  double mean = 0.0;
  double sem = 0.0;
  int n = 0;
};
MeanSem mean_sem(const std::vector<double>& xs);

// The firing-rate proxy: the sampled map's row at the current state-action.
Vec firing_rates(const sr::SuccessorMap& m, int s, int a);

// Belief-weighted average map, frozen at probe time.
struct ProbeTemplate {
  RowMat rows;  // (|S| * |A|) x |S|
  int n_actions = 0;
};
ProbeTemplate probe_template(const std::vector<const sr::SuccessorMap*>& maps,
                             const Vec& weights);

struct FiringStep {
  int trial = 0;  // trial index within the session
  int s = 0;
  int a = 0;
  Vec firing;
};

struct FlickerTrace {
  std::vector<int> step_trial;       // trial of each kept step
  std::vector<double> z_diff;        // z_post - z_pre per kept step
  std::vector<double> trial_mean;    // mean z-diff per trial (NaN when empty)
  int skipped_steps = 0;             // zero-variance correlations
  bool degenerate_z = false;         // a correlation series had zero variance
};

// Per-step correlation of the firing vector against the pre/post template
// rows at the same (s, a); both series are z-scored over the session's
// rewarded-trial steps.
FlickerTrace flicker_trace(const std::vector<FiringStep>& steps,
                           const ProbeTemplate& pre, const ProbeTemplate& post,
                           int n_trials);

// Spearman correlation of (trial number, mean z-diff) over the first
// `max_trial` trials of one session.
std::optional<double> session_trial_spearman(const FlickerTrace& trace, int max_trial);

// Leave-one-out nearest-template decoding by Pearson correlation; rows are
// normalized to sum to 1. Trials with degenerate templates are excluded.
Mat splitter_decode(const std::vector<std::pair<int, Vec>>& trials, int n_types = 4,
                    int* excluded = nullptr);

}  // namespace bsr::analysis
