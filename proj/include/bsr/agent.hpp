#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bsr/config.hpp"
#include "bsr/crfilter.hpp"
#include "bsr/envs.hpp"
#include "bsr/replay.hpp"
#include "bsr/rng.hpp"
#include "bsr/sr.hpp"

namespace bsr::agents {

// Exploration anneals linearly from 1 over the first `anneal_episodes`
// episodes and stops at the configured target.
double epsilon_schedule(int episode, double target, int anneal_episodes);

// Linear CR learning-rate anneal; constant after the horizon.
double alpha_cr_schedule(int episode, double start, double final, int horizon);

bool uses_filter(AgentKind kind);

struct ActionChoice {
  int action = 0;
  int context = 0;  // sampled map (BSR family), pinned (KQ), active (GPI)
};

// The tabular agent zoo. One class; the kind decides how contexts are
// chosen, which maps learn, and whether the filter runs.
class TabularAgent {
 public:
  TabularAgent(const RunConfig& cfg, int n_states, RngStreams* streams);

  // Harness routing decides who hears a task change; with_rewards publishes
  // the true reward weights (Experiment I's signalled setting).
  void on_task_change(const envs::TaskChange& change, bool with_rewards);

  void begin_episode(int episode_index, int s0);
  ActionChoice select_action(int s);
  void observe(const Transition& t, bool terminal,
               bool suppress_reward_regression = false);
  void end_episode();

  int k() const { return cfg_.k; }
  const Vec& omega() const { return omega_; }
  const sr::SuccessorMap& map(int i) const { return maps_[i]; }
  const Vec& reward_weights(int i) const;
  const Vec& cr_map(int i) const { return w_cr_[i]; }
  int most_likely_context() const {
    return cfg_.agent == AgentKind::Gpi ? gpi_active_ : crfilter::winner_take_all(omega_);
  }
  // Weights for building probe templates: the belief for sampling agents,
  // uniform over in-use maps for GPI.
  Vec template_weights() const;
  double current_epsilon() const { return epsilon_; }
  double current_alpha_cr() const { return alpha_cr_; }
  const crfilter::ParticleFilter* filter() const { return filter_ ? &*filter_ : nullptr; }
  const replay::ContextBuffer& buffer(int i) const { return buffers_[i]; }
  int gpi_active_map() const { return gpi_active_; }

  // Foraging: collected rewards are masked out of w at evaluation time only.
  void set_value_mask(const std::vector<char>* collected) { value_mask_ = collected; }

  struct FilterTraceRow {
    long t = 0;
    double v_cr = 0.0;
    Vec omega;
    int winner = 0;
  };
  const std::vector<FilterTraceRow>& filter_trace() const { return trace_; }

  // Cheap digest of all learnable state; probes must leave it unchanged.
  std::uint64_t state_hash() const;

 private:
  void apply_exploration_offset();
  Vec effective_w(int context) const;
  int greedy_for(int context, int s);
  ActionChoice gpi_choice(int s, bool random_action);
  void td_and_replay(const Transition& t);
  void process_observation(int state, double v_cr);
  std::vector<char> present_contexts(const std::vector<int>& proposals) const;

  RunConfig cfg_;
  int n_states_;
  RngStreams* rng_;

  std::vector<sr::SuccessorMap> maps_;
  std::vector<Vec> w_;
  std::vector<Vec> w_cr_;
  Vec omega_;
  std::vector<replay::ContextBuffer> buffers_;
  crfilter::CRKernel kernel_;
  std::optional<crfilter::ParticleFilter> filter_;

  // GSR: per-particle conjugate posteriors, shared copy-on-write
  using PosteriorPtr = std::shared_ptr<const crfilter::DiagGaussianPosterior>;
  std::vector<std::vector<PosteriorPtr>> gsr_post_, gsr_post_next_;

  // GPI bookkeeping
  Vec gpi_live_w_;
  std::vector<char> gpi_used_;
  int gpi_active_ = 0;

  int kq_context_ = 0;

  // episode-local CR pipeline
  std::vector<int> ep_states_;
  std::vector<double> ep_rewards_;  // ep_rewards_[j] = reward on arrival at ep_states_[j]
  std::vector<std::pair<int, double>> ep_cr_obs_;  // (state, v_cr), BSR2 end pass

  const std::vector<char>* value_mask_ = nullptr;
  int episode_index_ = 0;
  double epsilon_ = 1.0;
  double alpha_cr_ = 0.0;
  long total_steps_ = 0;
  std::vector<FilterTraceRow> trace_;
};

}  // namespace bsr::agents
