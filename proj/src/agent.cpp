#include "bsr/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace bsr::agents {

double epsilon_schedule(int episode, double target, int anneal_episodes) {
  const double annealed = 1.0 - static_cast<double>(episode) / anneal_episodes;
  return std::max(target, annealed);
}

double alpha_cr_schedule(int episode, double start, double final, int horizon) {
  const double frac = std::min(1.0, static_cast<double>(episode) / horizon);
  return start + (final - start) * frac;
}

bool uses_filter(AgentKind kind) {
  switch (kind) {
    case AgentKind::Bsr:
    case AgentKind::Bsr2:
    case AgentKind::Gsr:
    case AgentKind::Ssr:
    case AgentKind::SsrPlus:
      return true;
    case AgentKind::Ew:
    case AgentKind::Kq:
    case AgentKind::Gpi:
      return false;
  }
  return false;
}

TabularAgent::TabularAgent(const RunConfig& cfg, int n_states, RngStreams* streams)
    : cfg_(cfg), n_states_(n_states), rng_(streams),
      kernel_(crfilter::cr_kernel(cfg.gamma, cfg.filter_delay)) {
  maps_.reserve(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i) maps_.emplace_back(n_states_, kNumActions, n_states_);
  w_.resize(cfg_.k);
  w_cr_.resize(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i) {
    w_[i] = Vec(n_states_);
    w_cr_[i] = Vec(n_states_);
    for (int d = 0; d < n_states_; ++d) w_[i][d] = 0.01 * rng_->init.uniform01();
    for (int d = 0; d < n_states_; ++d) w_cr_[i][d] = 0.01 * rng_->init.uniform01();
  }
  omega_ = Vec::Constant(cfg_.k, 1.0 / cfg_.k);
  buffers_.reserve(cfg_.k);
  for (int i = 0; i < cfg_.k; ++i) buffers_.emplace_back(i, cfg_.buffer_capacity);

  if (uses_filter(cfg_.agent)) {
    filter_.emplace(cfg_.n_particles, cfg_.particle_window, cfg_.k, cfg_.alpha_dp,
                    cfg_.resample, rng_->init);
  }
  if (cfg_.agent == AgentKind::Gsr) {
    auto prior = std::make_shared<const crfilter::DiagGaussianPosterior>(
        crfilter::DiagGaussianPosterior::standard(n_states_));
    gsr_post_.assign(cfg_.n_particles, std::vector<PosteriorPtr>(cfg_.k, prior));
    gsr_post_next_ = gsr_post_;
  }
  if (cfg_.agent == AgentKind::Gpi) {
    gpi_live_w_ = Vec::Zero(n_states_);
    for (int d = 0; d < n_states_; ++d) gpi_live_w_[d] = 0.01 * rng_->init.uniform01();
    gpi_used_.assign(cfg_.k, 0);
  }
}

const Vec& TabularAgent::reward_weights(int i) const {
  return cfg_.agent == AgentKind::Gpi ? gpi_live_w_ : w_[i];
}

Vec TabularAgent::template_weights() const {
  if (cfg_.agent != AgentKind::Gpi) return omega_;
  Vec w = Vec::Zero(cfg_.k);
  int used = 0;
  for (int i = 0; i < cfg_.k; ++i)
    if (gpi_used_[i]) ++used;
  if (used == 0) {
    w.setConstant(1.0 / cfg_.k);
    return w;
  }
  for (int i = 0; i < cfg_.k; ++i)
    if (gpi_used_[i]) w[i] = 1.0 / used;
  return w;
}

void TabularAgent::on_task_change(const envs::TaskChange& change, bool with_rewards) {
  if (with_rewards && change.true_w.size() == n_states_) {
    if (cfg_.agent == AgentKind::Gpi) gpi_live_w_ = change.true_w;
    else
      for (int j = 0; j < cfg_.k; ++j) w_[j] = change.true_w;
  }
  if (cfg_.agent == AgentKind::Kq) {
    kq_context_ = change.trial_type >= 0
                      ? change.trial_type
                      : envs::quadrant(change.goal, static_cast<int>(std::lround(
                                                        std::sqrt(n_states_))));
    kq_context_ = std::min(kq_context_, cfg_.k - 1);
    omega_.setZero();
    omega_[kq_context_] = 1.0;
  }
  if (cfg_.agent == AgentKind::Gpi) {
    if (cfg_.gpi_reward_mode == GpiRewardMode::Stored && gpi_used_[gpi_active_])
      w_[gpi_active_] = gpi_live_w_;  // freeze the outgoing map's reward view
    int slot = -1;
    for (int i = 0; i < cfg_.k; ++i)
      if (!gpi_used_[i]) { slot = i; break; }
    if (slot < 0) slot = rng_->agent_events.below(cfg_.k);
    // the map itself carries over and is overwritten by learning; only the
    // memory buffer is reset so the new task's replay starts clean
    buffers_[slot].clear();
    gpi_used_[slot] = 1;
    gpi_active_ = slot;
  }
}

void TabularAgent::begin_episode(int episode_index, int s0) {
  episode_index_ = episode_index;
  epsilon_ = epsilon_schedule(episode_index, cfg_.epsilon, cfg_.epsilon_anneal_episodes);
  alpha_cr_ = alpha_cr_schedule(episode_index, cfg_.alpha_cr_start, cfg_.alpha_cr_final,
                                cfg_.alpha_cr_horizon);
  if (cfg_.offset_mode != OffsetMode::None && cfg_.offset_per_episode)
    apply_exploration_offset();
  ep_states_.assign(1, s0);
  ep_rewards_.assign(1, 0.0);
  ep_cr_obs_.clear();
}

void TabularAgent::apply_exploration_offset() {
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

Vec TabularAgent::effective_w(int context) const {
  const Vec& base = cfg_.agent == AgentKind::Gpi
                        ? (cfg_.gpi_reward_mode == GpiRewardMode::Shared ||
                                   context == gpi_active_
                               ? gpi_live_w_
                               : w_[context])
                        : w_[context];
  if (!value_mask_) return base;
  return envs::forage_value_mask(base, *value_mask_);
}

int TabularAgent::greedy_for(int context, int s) {
  return sr::argmax_random_tie(sr::q_values(maps_[context], s, effective_w(context)),
                               rng_->action);
}

ActionChoice TabularAgent::gpi_choice(int s, bool random_action) {
  if (random_action) return {rng_->action.below(kNumActions), gpi_active_};
  double best_q = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> ties;
  for (int i = 0; i < cfg_.k; ++i) {
    if (!gpi_used_[i]) continue;
    const Vec q = sr::q_values(maps_[i], s, effective_w(i));
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

ActionChoice TabularAgent::select_action(int s) {
  if (cfg_.agent == AgentKind::Gpi) {
    if (cfg_.offset_mode != OffsetMode::None && !cfg_.offset_per_episode)
      apply_exploration_offset();
    return gpi_choice(s, rng_->action.bernoulli(epsilon_));
  }

  int context;
  if (cfg_.agent == AgentKind::Kq) context = kq_context_;
  else context = rng_->action.categorical(omega_.data(), cfg_.k);

  if (cfg_.offset_mode != OffsetMode::None && !cfg_.offset_per_episode)
    apply_exploration_offset();

  const bool random_action = rng_->action.bernoulli(epsilon_);
  const int a = random_action ? rng_->action.below(kNumActions) : greedy_for(context, s);
  return {a, context};
}

void TabularAgent::td_and_replay(const Transition& t) {
  int single = -1;
  switch (cfg_.agent == AgentKind::Gpi ? UpdatePolicy::Sampled : cfg_.update_policy) {
    case UpdatePolicy::AllMaps:
      break;
    case UpdatePolicy::MostLikely:
      single = most_likely_context();
      break;
    case UpdatePolicy::Sampled:
      single = cfg_.agent == AgentKind::Gpi ? gpi_active_ : t.context;
      break;
  }
  const int divisor = single < 0 ? cfg_.k : 1;
  const int lo = single < 0 ? 0 : single;
  const int hi = single < 0 ? cfg_.k - 1 : single;
  for (int j = lo; j <= hi; ++j) {
    const Vec& w = cfg_.agent == AgentKind::Gpi ? gpi_live_w_ : w_[j];
    sr::td_update(maps_[j], t, w, cfg_.gamma, cfg_.alpha_sr, divisor);
    if (cfg_.replay_minibatch > 0 && buffers_[j].size() > 0) {
      const auto batch = buffers_[j].sample_minibatch(cfg_.replay_minibatch, rng_->replay);
      replay::replay_update(maps_[j], batch, w, cfg_.gamma, cfg_.alpha_sr, divisor);
    }
  }
}

void TabularAgent::observe(const Transition& t, bool terminal,
                           bool suppress_reward_regression) {
  (void)terminal;  // full Bellman backup everywhere; episode ends via the driver
  Transition stored = t;
  if (cfg_.agent == AgentKind::Gpi) stored.context = gpi_active_;
  buffers_[stored.context].push(stored);

  if (!suppress_reward_regression) {
    if (cfg_.agent == AgentKind::Gpi) {
      sr::reward_weight_update(gpi_live_w_, t.s_next, t.r, cfg_.alpha_w);
    } else {
      for (int j = 0; j < cfg_.k; ++j)
        sr::reward_weight_update(w_[j], t.s_next, t.r, cfg_.alpha_w);
    }
  }

  td_and_replay(stored);

  ++total_steps_;
  if (!filter_) return;

  ep_states_.push_back(t.s_next);
  ep_rewards_.push_back(t.r);
  const int steps_taken = static_cast<int>(ep_states_.size()) - 1;
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
    const auto v = crfilter::cr_value(rw, mask, kernel_, /*normalize=*/true);
    if (v) process_observation(ep_states_[m], *v);
  }
}

void TabularAgent::process_observation(int state, double v_cr) {
  auto& filter = *filter_;
  const auto& props = filter.propose(rng_->proposal);
  std::vector<double> weights(cfg_.n_particles);

  if (cfg_.agent == AgentKind::Gsr) {
    for (int p = 0; p < cfg_.n_particles; ++p) {
      const int c = props[p];
      const auto& post = gsr_post_[p][c];
      const auto [mean, var] = post->predictive(state, cfg_.sigma_cr);
      weights[p] = crfilter::gaussian_likelihood(v_cr, mean, std::sqrt(var));
      auto next = std::make_shared<crfilter::DiagGaussianPosterior>(*post);
      next->update(state, v_cr, cfg_.sigma_cr);
      gsr_post_[p][c] = std::move(next);
    }
  } else {
    std::vector<double> lik(cfg_.k, -1.0);
    for (int p = 0; p < cfg_.n_particles; ++p) {
      const int c = props[p];
      if (lik[c] < 0.0)
        lik[c] = crfilter::gaussian_likelihood(v_cr, w_cr_[c][state], cfg_.sigma_cr);
      weights[p] = lik[c];
    }
  }

  const auto out = filter.commit(weights, rng_->resample);
  omega_ = out.omega;
  if (cfg_.agent == AgentKind::Gsr) {
    const auto& src = filter.resample_src();
    for (int p = 0; p < cfg_.n_particles; ++p) gsr_post_next_[p] = gsr_post_[src[p]];
    gsr_post_.swap(gsr_post_next_);
  } else if (cfg_.agent == AgentKind::Bsr2) {
    ;  // maps stay frozen during the episode
  } else {
    crfilter::cr_map_update(w_cr_[out.winner], state, v_cr, alpha_cr_);
  }
  ep_cr_obs_.emplace_back(state, v_cr);
  if (cfg_.trace_filter)
    trace_.push_back({total_steps_, v_cr, omega_, out.winner});
}

void TabularAgent::end_episode() {
  if (!filter_) return;
  const int T = static_cast<int>(ep_states_.size()) - 1;
  if (T < 1) return;
  const int f = cfg_.filter_delay;
  const int first = T >= f ? T - f + 1 : 0;
  const int count = T - first + 1;

  std::vector<int> states(count);
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
    states[idx] = ep_states_[m];
    values[idx] = *crfilter::cr_value(rw, mask, kernel_, true);
  }

  auto& filter = *filter_;
  const auto& props = filter.propose_joint(count, rng_->proposal);
  std::vector<double> weights(cfg_.n_particles);

  if (cfg_.agent == AgentKind::Gsr) {
    for (int p = 0; p < cfg_.n_particles; ++p) {
      double w = 1.0;
      for (int idx = 0; idx < count; ++idx) {
        const int c = props[p][idx];
        const auto& post = gsr_post_[p][c];
        const auto [mean, var] = post->predictive(states[idx], cfg_.sigma_cr);
        w *= crfilter::gaussian_likelihood(values[idx], mean, std::sqrt(var));
        auto next = std::make_shared<crfilter::DiagGaussianPosterior>(*post);
        next->update(states[idx], values[idx], cfg_.sigma_cr);
        gsr_post_[p][c] = std::move(next);
      }
      weights[p] = w;
    }
  } else {
    std::vector<std::vector<double>> lik(count, std::vector<double>(cfg_.k, -1.0));
    for (int p = 0; p < cfg_.n_particles; ++p) {
      double w = 1.0;
      for (int idx = 0; idx < count; ++idx) {
        const int c = props[p][idx];
        if (lik[idx][c] < 0.0)
          lik[idx][c] = crfilter::gaussian_likelihood(values[idx],
                                                      w_cr_[c][states[idx]],
                                                      cfg_.sigma_cr);
        w *= lik[idx][c];
      }
      weights[p] = w;
    }
  }

  const auto out = filter.commit(weights, rng_->resample);
  omega_ = out.omega;
  if (cfg_.agent == AgentKind::Gsr) {
    const auto& src = filter.resample_src();
    for (int p = 0; p < cfg_.n_particles; ++p) gsr_post_next_[p] = gsr_post_[src[p]];
    gsr_post_.swap(gsr_post_next_);
  }
  for (int idx = 0; idx < count; ++idx) ep_cr_obs_.emplace_back(states[idx], values[idx]);

  if (cfg_.agent == AgentKind::Bsr2) {
    const int winner = most_likely_context();
    for (const auto& [s, v] : ep_cr_obs_)
      crfilter::cr_map_update(w_cr_[winner], s, v, alpha_cr_);
  }
}

namespace {
inline void hash_mix(std::uint64_t& h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
}
inline void hash_doubles(std::uint64_t& h, const double* d, long n) {
  for (long i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &d[i], sizeof(bits));
    hash_mix(h, bits);
  }
}
}  // namespace

std::uint64_t TabularAgent::state_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& m : maps_) hash_doubles(h, m.data().data(), m.data().size());
  for (const auto& w : w_) hash_doubles(h, w.data(), w.size());
  for (const auto& w : w_cr_) hash_doubles(h, w.data(), w.size());
  hash_doubles(h, omega_.data(), omega_.size());
  if (filter_)
    for (const auto& row : filter_->rows())
      for (int c : row) hash_mix(h, static_cast<std::uint64_t>(c));
  for (const auto& b : buffers_) hash_mix(h, static_cast<std::uint64_t>(b.size()));
  if (cfg_.agent == AgentKind::Gsr)
    for (const auto& particle : gsr_post_)
      for (const auto& post : particle) {
        hash_doubles(h, post->mean.data(), post->mean.size());
        hash_doubles(h, post->var.data(), post->var.size());
      }
  if (cfg_.agent == AgentKind::Gpi) {
    hash_doubles(h, gpi_live_w_.data(), gpi_live_w_.size());
    hash_mix(h, static_cast<std::uint64_t>(gpi_active_));
  }
  return h;
}

}  // namespace bsr::agents
