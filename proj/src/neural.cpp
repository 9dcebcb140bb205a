#include "bsr/neural.hpp"

#include <cmath>

namespace bsr::neural {

Mat glorot_init(int fan_out, int fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Mat w(fan_out, fan_in);
  for (int r = 0; r < fan_out; ++r)
    for (int c = 0; c < fan_in; ++c) w(r, c) = (2.0 * rng.uniform01() - 1.0) * bound;
  return w;
}

Vec dropout_mask(int n, double rate, Rng& rng) {
  Vec keep(n);
  const double scale = 1.0 / (1.0 - rate);
  for (int i = 0; i < n; ++i) keep[i] = rng.uniform01() < rate ? 0.0 : scale;
  return keep;
}

SuccessorNetwork::SuccessorNetwork(int input, int hidden, int depth, int n_heads,
                                   int output, Rng& rng)
    : input_(input), output_(output) {
  int prev = input;
  for (int l = 0; l < depth; ++l) {
    hidden_w_.push_back(glorot_init(hidden, prev, rng));
    hidden_b_.push_back(Vec::Zero(hidden));
    prev = hidden;
  }
  for (int h = 0; h < n_heads; ++h) {
    head_w_.push_back(glorot_init(output, prev, rng));
    head_b_.push_back(Vec::Zero(output));
  }
}

Vec SuccessorNetwork::forward(const Vec& phi, int head) const {
  Vec h = phi;
  for (size_t l = 0; l < hidden_w_.size(); ++l)
    h = (hidden_w_[l] * h + hidden_b_[l]).array().tanh().matrix();
  return head_w_[head] * h + head_b_[head];
}

Vec SuccessorNetwork::q_all_heads(const Vec& phi, const Vec& w) const {
  Vec h = phi;
  for (size_t l = 0; l < hidden_w_.size(); ++l)
    h = (hidden_w_[l] * h + hidden_b_[l]).array().tanh().matrix();
  Vec q(n_heads());
  for (int a = 0; a < n_heads(); ++a)
    q[a] = (head_w_[a] * h + head_b_[a]).dot(w);
  return q;
}

SuccessorNetwork::TrainCache SuccessorNetwork::forward_train(const Vec& phi, int head,
                                                             const Vec& keep) const {
  TrainCache cache;
  cache.acts.reserve(hidden_w_.size() + 1);
  cache.acts.push_back(phi);
  for (size_t l = 0; l < hidden_w_.size(); ++l) {
    Vec h = (hidden_w_[l] * cache.acts.back() + hidden_b_[l]).array().tanh().matrix();
    if (l + 1 == hidden_w_.size()) h = h.cwiseProduct(keep);
    cache.acts.push_back(std::move(h));
  }
  cache.out = head_w_[head] * cache.acts.back() + head_b_[head];
  return cache;
}

SuccessorNetwork::Gradients SuccessorNetwork::backward(const TrainCache& cache, int head,
                                                       const Vec& delta,
                                                       const Vec& keep) const {
  Gradients g;
  g.head = head;
  const Vec d_out = -delta;  // d(0.5*||target - out||^2)/d out
  g.head_w = d_out * cache.acts.back().transpose();
  g.head_b = d_out;

  Vec d_act = head_w_[head].transpose() * d_out;
  g.hidden_w.resize(hidden_w_.size());
  g.hidden_b.resize(hidden_w_.size());
  for (int l = static_cast<int>(hidden_w_.size()) - 1; l >= 0; --l) {
    Vec masked = cache.acts[l + 1];
    if (l + 1 == static_cast<int>(hidden_w_.size())) {
      d_act = d_act.cwiseProduct(keep);
      // recover pre-dropout activation for the tanh derivative
      for (int i = 0; i < masked.size(); ++i)
        if (keep[i] != 0.0) masked[i] /= keep[i];
    }
    const Vec d_pre = d_act.cwiseProduct((1.0 - masked.array().square()).matrix());
    g.hidden_w[l] = d_pre * cache.acts[l].transpose();
    g.hidden_b[l] = d_pre;
    if (l > 0) d_act = hidden_w_[l].transpose() * d_pre;
  }
  return g;
}

RmsProp::RmsProp(const SuccessorNetwork& net, double decay, double epsilon)
    : decay_(decay), eps_(epsilon) {
  for (const auto& w : net.hidden_w()) hidden_w_cache_.push_back(Mat::Zero(w.rows(), w.cols()));
  for (const auto& b : net.hidden_b()) hidden_b_cache_.push_back(Vec::Zero(b.size()));
  for (const auto& w : net.head_w()) head_w_cache_.push_back(Mat::Zero(w.rows(), w.cols()));
  for (const auto& b : net.head_b()) head_b_cache_.push_back(Vec::Zero(b.size()));
}

void RmsProp::step(SuccessorNetwork& net, const SuccessorNetwork::Gradients& g, double lr) {
  auto apply_m = [&](Mat& cache, Mat& param, const Mat& grad) {
    cache = decay_ * cache + (1.0 - decay_) * grad.cwiseProduct(grad);
    param -= lr * grad.cwiseQuotient((cache.cwiseSqrt().array() + eps_).matrix());
  };
  auto apply_v = [&](Vec& cache, Vec& param, const Vec& grad) {
    cache = decay_ * cache + (1.0 - decay_) * grad.cwiseProduct(grad);
    param -= lr * grad.cwiseQuotient((cache.cwiseSqrt().array() + eps_).matrix());
  };
  for (size_t l = 0; l < g.hidden_w.size(); ++l) {
    apply_m(hidden_w_cache_[l], net.hidden_w()[l], g.hidden_w[l]);
    apply_v(hidden_b_cache_[l], net.hidden_b()[l], g.hidden_b[l]);
  }
  apply_m(head_w_cache_[g.head], net.head_w()[g.head], g.head_w);
  apply_v(head_b_cache_[g.head], net.head_b()[g.head], g.head_b);
}

NeuralAgent::NeuralAgent(const RunConfig& cfg, int input_dim, RngStreams* streams)
    : cfg_(cfg), input_dim_(input_dim), rng_(streams),
      kernel_(crfilter::cr_kernel(cfg.gamma, cfg.filter_delay)) {
  nets_.reserve(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i)
    nets_.emplace_back(input_dim_, cfg_.hidden_width, cfg_.hidden_layers, kNumActions,
                       input_dim_, rng_->init);
  targets_ = nets_;
  opts_.reserve(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i)
    opts_.emplace_back(nets_[i], cfg_.rms_decay, cfg_.rms_epsilon);

  w_.resize(cfg_.k);
  w_cr_.resize(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i) {
    w_[i] = Vec(input_dim_);
    w_cr_[i] = Vec(input_dim_);
    for (int d = 0; d < input_dim_; ++d) w_[i][d] = 0.01 * rng_->init.uniform01();
    for (int d = 0; d < input_dim_; ++d) w_cr_[i][d] = 0.01 * rng_->init.uniform01();
  }
  omega_ = Vec::Constant(cfg_.k, 1.0 / cfg_.k);
  buffers_.assign(cfg_.k, replay::EpisodeBuffer<FeatureTransition>(cfg_.buffer_episodes));
  if (agents::uses_filter(cfg_.agent))
    filter_.emplace(cfg_.n_particles, cfg_.particle_window, cfg_.k, cfg_.alpha_dp,
                    cfg_.resample, rng_->init);
  if (cfg_.agent == AgentKind::Gpi) {
    gpi_live_w_ = Vec(input_dim_);
    for (int d = 0; d < input_dim_; ++d) gpi_live_w_[d] = 0.01 * rng_->init.uniform01();
    gpi_used_.assign(cfg_.k, 0);
  }
}

const Vec& NeuralAgent::reward_weights(int i) const {
  return cfg_.agent == AgentKind::Gpi ? gpi_live_w_ : w_[i];
}

void NeuralAgent::on_task_change(const envs::TaskChange& change, bool with_rewards) {
  (void)change;
  (void)with_rewards;  // continuous tasks never publish reward weights
  if (cfg_.agent == AgentKind::Gpi) {
    if (cfg_.gpi_reward_mode == GpiRewardMode::Stored && gpi_used_[gpi_active_])
      w_[gpi_active_] = gpi_live_w_;
    int slot = -1;
    for (int i = 0; i < cfg_.k; ++i)
      if (!gpi_used_[i]) { slot = i; break; }
    if (slot < 0) slot = rng_->agent_events.below(cfg_.k);
    // network parameters carry over; only the replay memory is reset
    buffers_[slot].clear();
    gpi_used_[slot] = 1;
    gpi_active_ = slot;
  }
}

void NeuralAgent::begin_episode(long episode_index, const Vec& phi0) {
  episode_index_ = episode_index;
  step_in_episode_ = 0;
  epsilon_ = agents::epsilon_schedule(static_cast<int>(episode_index), cfg_.epsilon,
                                      cfg_.epsilon_anneal_episodes);
  alpha_cr_ = agents::alpha_cr_schedule(static_cast<int>(episode_index), cfg_.alpha_cr_start,
                                        cfg_.alpha_cr_final, cfg_.alpha_cr_horizon);
  if (cfg_.offset_mode != OffsetMode::None && cfg_.offset_per_episode)
    apply_exploration_offset();
  for (auto& b : buffers_) b.begin_episode(episode_index);
  ep_phis_.assign(1, phi0);
  ep_rewards_.assign(1, 0.0);
  ep_cr_obs_idx_.clear();
}

void NeuralAgent::sync_targets() {
  for (int i = 0; i < cfg_.k; ++i) targets_[i] = nets_[i];
  ++sync_count_;
}

void NeuralAgent::apply_exploration_offset() {
  if (cfg_.agent == AgentKind::Gpi) {
    gpi_live_w_.array() += cfg_.alpha_ws * cfg_.c_ws;
    return;
  }
  for (int j = 0; j < cfg_.k; ++j) {
    w_[j].array() += cfg_.alpha_ws * cfg_.c_ws;
    if (cfg_.offset_mode == OffsetMode::ConstantPlusCr)
      w_[j] += cfg_.alpha_ws * w_cr_[j];
  }
}

Vec NeuralAgent::effective_w(int context) const {
  if (cfg_.agent != AgentKind::Gpi) return w_[context];
  if (cfg_.gpi_reward_mode == GpiRewardMode::Shared || context == gpi_active_)
    return gpi_live_w_;
  return w_[context];
}

agents::ActionChoice NeuralAgent::select_action(const Vec& phi) {
  if (step_in_episode_ % cfg_.sync_interval == 0) sync_targets();

  if (cfg_.agent == AgentKind::Gpi) {
    if (cfg_.offset_mode != OffsetMode::None && !cfg_.offset_per_episode)
      apply_exploration_offset();
    if (rng_->action.bernoulli(epsilon_))
      return {rng_->action.below(kNumActions), gpi_active_};
    double best_q = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<int, int>> ties;
    for (int i = 0; i < cfg_.k; ++i) {
      if (!gpi_used_[i]) continue;
      const Vec q = nets_[i].q_all_heads(phi, effective_w(i));
      for (int a = 0; a < kNumActions; ++a) {
        if (q[a] > best_q) {
          best_q = q[a];
          ties.clear();
        }
        if (q[a] == best_q) ties.emplace_back(i, a);
      }
    }
    if (ties.empty()) return {rng_->action.below(kNumActions), gpi_active_};
    const auto [map, action] = ties[rng_->action.below(static_cast<int>(ties.size()))];
    return {action, map};
  }

  const int context = rng_->action.categorical(omega_.data(), cfg_.k);
  if (cfg_.offset_mode != OffsetMode::None && !cfg_.offset_per_episode)
    apply_exploration_offset();
  const bool random_action = rng_->action.bernoulli(epsilon_);
  int a;
  if (random_action) {
    a = rng_->action.below(kNumActions);
  } else {
    a = sr::argmax_random_tie(nets_[context].q_all_heads(phi, w_[context]), rng_->action);
  }
  return {a, context};
}

void NeuralAgent::train_on(int ctx, const FeatureTransition& t, int divisor) {
  SuccessorNetwork& net = nets_[ctx];
  const SuccessorNetwork& target = targets_[ctx];
  const Vec& w = cfg_.agent == AgentKind::Gpi ? gpi_live_w_ : w_[ctx];

  const int a_next = sr::argmax_lowest(target.q_all_heads(t.phi_next, w));
  const Vec target_vec = t.phi_next + cfg_.gamma * target.forward(t.phi_next, a_next);

  const Vec keep = dropout_mask(cfg_.hidden_width, cfg_.dropout_rate, rng_->dropout);
  const auto cache = net.forward_train(t.phi_s, t.a, keep);
  const Vec delta = target_vec - cache.out;
  const auto grads = net.backward(cache, t.a, delta, keep);
  opts_[ctx].step(net, grads, cfg_.alpha_sr / divisor);
}

void NeuralAgent::observe(const Vec& phi_s, int a, const Vec& phi_next, double r,
                          int context, bool terminal) {
  (void)terminal;  // full backup; no terminal masking anywhere
  const int storage = cfg_.agent == AgentKind::Gpi ? gpi_active_ : context;
  buffers_[storage].push(episode_index_, {phi_s, a, phi_next, r, storage});

  if (cfg_.agent == AgentKind::Gpi) {
    sr::reward_weight_update(gpi_live_w_, phi_next, r, cfg_.alpha_w);
  } else {
    for (int j = 0; j < cfg_.k; ++j)
      sr::reward_weight_update(w_[j], phi_next, r, cfg_.alpha_w);
  }

  int single = -1;
  switch (cfg_.agent == AgentKind::Gpi ? UpdatePolicy::Sampled : cfg_.update_policy) {
    case UpdatePolicy::AllMaps: break;
    case UpdatePolicy::MostLikely: single = most_likely_context(); break;
    case UpdatePolicy::Sampled:
      single = cfg_.agent == AgentKind::Gpi ? gpi_active_ : context;
      break;
  }
  const int divisor = single < 0 ? cfg_.k : 1;
  const int lo = single < 0 ? 0 : single;
  const int hi = single < 0 ? cfg_.k - 1 : single;
  FeatureTransition direct{phi_s, a, phi_next, r, storage};
  for (int j = lo; j <= hi; ++j) {
    train_on(j, direct, divisor);
    const auto batch = buffers_[j].sample_minibatch(cfg_.replay_minibatch, rng_->replay);
    for (const auto* entry : batch) train_on(j, *entry, divisor);
  }

  ++step_in_episode_;
  if (!filter_) return;

  ep_phis_.push_back(phi_next);
  ep_rewards_.push_back(r);
  const int steps_taken = static_cast<int>(ep_phis_.size()) - 1;
  if (steps_taken >= cfg_.filter_delay) {
    const int m = steps_taken - cfg_.filter_delay;
    const int f = cfg_.filter_delay;
    Vec rw = Vec::Zero(2 * f + 1), mask = Vec::Zero(2 * f + 1);
    for (int d = -f; d <= f; ++d) {
      const int j = m + d;
      if (j >= 1 && j <= steps_taken) {
        rw[d + f] = ep_rewards_[j];
        mask[d + f] = 1.0;
      }
    }
    // neural CR values are unnormalized
    const auto v = crfilter::cr_value(rw, mask, kernel_, /*normalize=*/false);
    process_observation(ep_phis_[m], *v);
    ep_cr_obs_idx_.emplace_back(m, *v);
  }
}

void NeuralAgent::process_observation(const Vec& phi, double v_cr) {
  auto& filter = *filter_;
  const auto& props = filter.propose(rng_->proposal);
  std::vector<double> weights(cfg_.n_particles);
  std::vector<double> lik(cfg_.k, -1.0);
  for (int p = 0; p < cfg_.n_particles; ++p) {
    const int c = props[p];
    if (lik[c] < 0.0)
      lik[c] = crfilter::gaussian_likelihood(v_cr, phi.dot(w_cr_[c]), cfg_.sigma_cr);
    weights[p] = lik[c];
  }
  const auto out = filter.commit(weights, rng_->resample);
  omega_ = out.omega;
  if (cfg_.agent != AgentKind::Bsr2)
    crfilter::cr_map_update(w_cr_[out.winner], phi, v_cr, alpha_cr_);
}

void NeuralAgent::end_episode() {
  const int T = static_cast<int>(ep_phis_.size()) - 1;
  if (T < 1) return;

  if (filter_) {
    const int f = cfg_.filter_delay;
    const int first = T >= f ? T - f + 1 : 0;
    const int count = T - first + 1;
    std::vector<double> values(count);
    for (int idx = 0; idx < count; ++idx) {
      const int m = first + idx;
      Vec rw = Vec::Zero(2 * f + 1), mask = Vec::Zero(2 * f + 1);
      for (int d = -f; d <= f; ++d) {
        const int j = m + d;
        if (j >= 1 && j <= T) {
          rw[d + f] = ep_rewards_[j];
          mask[d + f] = 1.0;
        }
      }
      values[idx] = *crfilter::cr_value(rw, mask, kernel_, false);
    }
    auto& filter = *filter_;
    const auto& props = filter.propose_joint(count, rng_->proposal);
    std::vector<double> weights(cfg_.n_particles);
    std::vector<std::vector<double>> lik(count, std::vector<double>(cfg_.k, -1.0));
    for (int p = 0; p < cfg_.n_particles; ++p) {
      double w = 1.0;
      for (int idx = 0; idx < count; ++idx) {
        const int c = props[p][idx];
        if (lik[idx][c] < 0.0)
          lik[idx][c] = crfilter::gaussian_likelihood(
              values[idx], ep_phis_[first + idx].dot(w_cr_[c]), cfg_.sigma_cr);
        w *= lik[idx][c];
      }
      weights[p] = w;
    }
    const auto out = filter.commit(weights, rng_->resample);
    omega_ = out.omega;
    for (int idx = 0; idx < count; ++idx)
      ep_cr_obs_idx_.emplace_back(first + idx, values[idx]);

    if (cfg_.agent == AgentKind::Bsr2) {
      const int winner = most_likely_context();
      for (const auto& [m, v] : ep_cr_obs_idx_)
        crfilter::cr_map_update(w_cr_[winner], ep_phis_[m], v, alpha_cr_);
    }
  }

  // second pass of reward-weight updates over the episode, in order
  for (int j = 1; j <= T; ++j) {
    if (cfg_.agent == AgentKind::Gpi) {
      sr::reward_weight_update(gpi_live_w_, ep_phis_[j], ep_rewards_[j], cfg_.alpha_w);
    } else {
      for (int c = 0; c < cfg_.k; ++c)
        sr::reward_weight_update(w_[c], ep_phis_[j], ep_rewards_[j], cfg_.alpha_w);
    }
  }
}

}  // namespace bsr::neural
