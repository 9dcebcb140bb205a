#include "bsr/sr.hpp"

namespace bsr::sr {

Vec q_values(const SuccessorMap& m, StateId s, const Vec& w) {
  if (w.size() != m.dim())
    throw ConfigError("q_values: weight dimension does not match map dimension");
  Vec q(m.n_actions());
  for (int a = 0; a < m.n_actions(); ++a) q[a] = m.row(s, a).dot(w);
  return q;
}

int argmax_lowest(const Vec& q) {
  int best = 0;
  for (int i = 1; i < q.size(); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

int greedy_action(const SuccessorMap& m, StateId s, const Vec& w) {
  return argmax_lowest(q_values(m, s, w));
}

void td_update_with_bootstrap(SuccessorMap& m, StateId s, ActionId a, StateId s_next,
                              ActionId bootstrap_a, double gamma, double alpha_eff) {
  auto target_row = m.row(s_next, bootstrap_a);
  auto row = m.row(s, a);
  row += alpha_eff * (gamma * target_row - row).eval();
  row[s_next] += alpha_eff;  // phi(s') one-hot term
}

void td_update(SuccessorMap& m, const Transition& t, const Vec& w, double gamma,
               double alpha_sr, int n_maps_divisor) {
  const int a_star = greedy_action(m, t.s_next, w);
  td_update_with_bootstrap(m, t.s, t.a, t.s_next, a_star, gamma,
                           alpha_sr / n_maps_divisor);
}

void reward_weight_update(Vec& w, const Vec& phi_next, double r, double alpha_w) {
  w += alpha_w * (r - phi_next.dot(w)) * phi_next;
}

void reward_weight_update(Vec& w, int next_index, double r, double alpha_w) {
  w[next_index] += alpha_w * (r - w[next_index]);
}

Mat analytic_sr(const Mat& p_policy, double gamma) {
  const long n = p_policy.rows();
  if (p_policy.cols() != n) throw ConfigError("analytic_sr: P must be square");
  for (long i = 0; i < n; ++i) {
    if (std::abs(p_policy.row(i).sum() - 1.0) > 1e-9)
      throw ConfigError("analytic_sr: P rows must sum to 1");
  }
  if (gamma >= 1.0) throw ConfigError("analytic_sr: gamma must be < 1");
  // sum_k gamma^k P^{k+1} = (I - gamma P)^{-1} P
  Mat lhs = Mat::Identity(n, n) - gamma * p_policy;
  Eigen::PartialPivLU<Mat> lu(lhs);
  Mat sr = lu.solve(p_policy);
  if (!sr.allFinite()) throw NumericError("analytic_sr: singular system");
  return sr;
}

Mat analytic_state_action_sr(const std::function<int(int, int)>& step,
                             const Mat& p_policy, int n_actions, double gamma) {
  const long n = p_policy.rows();
  Mat occ = analytic_sr(p_policy, gamma);
  Mat out = Mat::Zero(n * n_actions, n);
  for (long s = 0; s < n; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      int s1 = step(static_cast<int>(s), a);
      out.row(s * n_actions + a) = gamma * occ.row(s1);
      out(s * n_actions + a, s1) += 1.0;
    }
  }
  return out;
}

}  // namespace bsr::sr
