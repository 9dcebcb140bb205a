#pragma once

#include <functional>

#include "bsr/types.hpp"

namespace bsr::sr {

// Expected discounted future feature occupancies, one row per (state, action).
class SuccessorMap {
 public:
  SuccessorMap(int n_states, int n_actions, int dim)
      : n_states_(n_states), n_actions_(n_actions), dim_(dim),
        m_(RowMat::Zero(static_cast<long>(n_states) * n_actions, dim)) {}

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int dim() const { return dim_; }

  auto row(StateId s, ActionId a) { return m_.row(static_cast<long>(s) * n_actions_ + a); }
  auto row(StateId s, ActionId a) const { return m_.row(static_cast<long>(s) * n_actions_ + a); }

  void set_zero() { m_.setZero(); }
  const RowMat& data() const { return m_; }
  RowMat& data() { return m_; }

 private:
  int n_states_, n_actions_, dim_;
  RowMat m_;
};

// Q[a] = M(s,a,:) . w
Vec q_values(const SuccessorMap& m, StateId s, const Vec& w);

// argmax over actions, ties broken by lowest action index
int greedy_action(const SuccessorMap& m, StateId s, const Vec& w);
int argmax_lowest(const Vec& q);

// behaviour argmax: exact ties are broken uniformly at random, so an
// uncovered (all-equal) row explores instead of pinning one action
template <typename RngT>
int argmax_random_tie(const Vec& q, RngT& rng) {
  double best = q[0];
  for (int i = 1; i < q.size(); ++i) best = std::max(best, q[i]);
  int ties[8];
  int n = 0;
  for (int i = 0; i < q.size() && n < 8; ++i)
    if (q[i] == best) ties[n++] = i;
  return ties[rng.below(n)];
}

// Bellman update with the bootstrap action chosen greedily under w; the
// backup is always the full one, terminal or not. The divisor spreads the
// learning mass when several maps are updated per step.
void td_update(SuccessorMap& m, const Transition& t, const Vec& w, double gamma,
               double alpha_sr, int n_maps_divisor);

// Same backup with the bootstrap action pinned (frozen-policy evaluation).
void td_update_with_bootstrap(SuccessorMap& m, StateId s, ActionId a, StateId s_next,
                              ActionId bootstrap_a, double gamma, double alpha_eff);

// Delta-rule regression of the reward weights onto experienced rewards.
void reward_weight_update(Vec& w, const Vec& phi_next, double r, double alpha_w);
void reward_weight_update(Vec& w, int next_index, double r, double alpha_w);

// Closed-form oracle: occupancies from the next step onward under a frozen
// policy transition matrix, SR(s,:) = sum_k gamma^k P^{k+1}(s,:).
Mat analytic_sr(const Mat& p_policy, double gamma);

// State-action rows for a deterministic environment step followed by the
// frozen policy: M(s,a,:) = e_{step(s,a)} + gamma * SR(step(s,a),:).
Mat analytic_state_action_sr(const std::function<int(int, int)>& step,
                             const Mat& p_policy, int n_actions, double gamma);

}  // namespace bsr::sr
