#pragma once

#include <array>
#include <optional>
#include <vector>

#include "bsr/agent.hpp"
#include "bsr/config.hpp"
#include "bsr/crfilter.hpp"
#include "bsr/envs.hpp"
#include "bsr/replay.hpp"
#include "bsr/rng.hpp"
#include "bsr/sr.hpp"

namespace bsr::neural {

// Glorot-uniform weight matrix, rows = fan_out, cols = fan_in. Biases start
// at zero by convention.
Mat glorot_init(int fan_out, int fan_in, Rng& rng);

// tanh MLP with one linear output head per action; head a approximates the
// successor features of (s, a).
class SuccessorNetwork {
 public:
  SuccessorNetwork(int input, int hidden, int depth, int n_heads, int output, Rng& rng);

  int input_dim() const { return input_; }
  int output_dim() const { return output_; }
  int n_heads() const { return static_cast<int>(head_w_.size()); }
  int depth() const { return static_cast<int>(hidden_w_.size()); }

  // Evaluation pass (expectation scaling: dropout is train-time only).
  Vec forward(const Vec& phi, int head) const;
  // All heads' outputs dotted with w, sharing the hidden pass.
  Vec q_all_heads(const Vec& phi, const Vec& w) const;
  Vec head_output(const Vec& phi, int head) const { return forward(phi, head); }

  struct TrainCache {
    std::vector<Vec> acts;  // acts[0]=phi, acts[l+1]=masked tanh output of layer l
    Vec out;
  };
  // keep has one entry per unit of the last hidden layer (0 or 1/(1-p)).
  TrainCache forward_train(const Vec& phi, int head, const Vec& keep) const;

  struct Gradients {
    std::vector<Mat> hidden_w;
    std::vector<Vec> hidden_b;
    Mat head_w;
    Vec head_b;
    int head = 0;
  };
  // Gradient of 0.5*||delta||^2 where delta = target - out, evaluated at the
  // cached training pass.
  Gradients backward(const TrainCache& cache, int head, const Vec& delta,
                     const Vec& keep) const;

  const std::vector<Mat>& hidden_w() const { return hidden_w_; }
  const std::vector<Vec>& hidden_b() const { return hidden_b_; }
  const std::vector<Mat>& head_w() const { return head_w_; }
  const std::vector<Vec>& head_b() const { return head_b_; }
  std::vector<Mat>& hidden_w() { return hidden_w_; }
  std::vector<Vec>& hidden_b() { return hidden_b_; }
  std::vector<Mat>& head_w() { return head_w_; }
  std::vector<Vec>& head_b() { return head_b_; }

 private:
  int input_, output_;
  std::vector<Mat> hidden_w_;
  std::vector<Vec> hidden_b_;
  std::vector<Mat> head_w_;
  std::vector<Vec> head_b_;
};

// Running mean-square gradient accumulator, one slot per parameter group.
class RmsProp {
 public:
  RmsProp(const SuccessorNetwork& net, double decay, double epsilon);
  void step(SuccessorNetwork& net, const SuccessorNetwork::Gradients& g, double lr);

 private:
  double decay_, eps_;
  std::vector<Mat> hidden_w_cache_;
  std::vector<Vec> hidden_b_cache_;
  std::vector<Mat> head_w_cache_;
  std::vector<Vec> head_b_cache_;
};

Vec dropout_mask(int n, double rate, Rng& rng);

// Replay entry for the continuous maze: traced embeddings are path dependent
// and must be stored, not recomputed.
struct FeatureTransition {
  Vec phi_s;
  int a = 0;
  Vec phi_next;
  double r = 0.0;
  int context = 0;
};

// Function-approximation agent for the continuous maze; mirrors the tabular
// step loop with networks in place of maps.
class NeuralAgent {
 public:
  NeuralAgent(const RunConfig& cfg, int input_dim, RngStreams* streams);

  void on_task_change(const envs::TaskChange& change, bool with_rewards);
  void begin_episode(long episode_index, const Vec& phi0);
  agents::ActionChoice select_action(const Vec& phi);
  void observe(const Vec& phi_s, int a, const Vec& phi_next, double r, int context,
               bool terminal);
  void end_episode();

  const Vec& omega() const { return omega_; }
  int most_likely_context() const { return crfilter::winner_take_all(omega_); }
  const SuccessorNetwork& net(int i) const { return nets_[i]; }
  const SuccessorNetwork& target_net(int i) const { return targets_[i]; }
  const Vec& reward_weights(int i) const;
  double current_epsilon() const { return epsilon_; }
  long sync_count() const { return sync_count_; }

 private:
  void sync_targets();
  void apply_exploration_offset();
  void train_on(int ctx, const FeatureTransition& t, int divisor);
  void process_observation(const Vec& phi, double v_cr);
  Vec effective_w(int context) const;

  RunConfig cfg_;
  int input_dim_;
  RngStreams* rng_;

  std::vector<SuccessorNetwork> nets_, targets_;
  std::vector<RmsProp> opts_;
  std::vector<Vec> w_, w_cr_;
  Vec omega_;
  std::vector<replay::EpisodeBuffer<FeatureTransition>> buffers_;
  crfilter::CRKernel kernel_;
  std::optional<crfilter::ParticleFilter> filter_;

  Vec gpi_live_w_;
  std::vector<char> gpi_used_;
  int gpi_active_ = 0;

  std::vector<Vec> ep_phis_;
  std::vector<double> ep_rewards_;
  std::vector<std::pair<int, double>> ep_cr_obs_idx_;  // (phi index, v_cr)

  long episode_index_ = 0;
  int step_in_episode_ = 0;
  double epsilon_ = 1.0;
  double alpha_cr_ = 0.0;
  long sync_count_ = 0;
};

}  // namespace bsr::neural
