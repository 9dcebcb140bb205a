#include "bsr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace bsr::analysis {

namespace {
std::optional<double> pearson_impl(const double* x, const double* y, long n) {
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (long i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (long i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}
}  // namespace

std::optional<double> pearson(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  return pearson_impl(x.data(), y.data(), x.size());
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("pearson: length mismatch");
  return pearson_impl(x.data(), y.data(), static_cast<long>(x.size()));
}

namespace {
std::vector<double> average_ranks(const std::vector<double>& xs) {
  const int n = static_cast<int>(xs.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = (i + j) / 2.0 + 1.0;  // average rank, 1-based
    for (int t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}
}  // namespace

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ConfigError("spearman: length mismatch");
  if (x.size() < 2) throw ConfigError("spearman: need at least two samples");
  return pearson(average_ranks(x), average_ranks(y));
}

double one_way_anova_f(const std::vector<std::vector<double>>& groups) {
  const int k = static_cast<int>(groups.size());
  if (k < 2) throw ConfigError("anova: need at least two groups");
  long n_total = 0;
  double grand = 0.0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ConfigError("anova: each group needs at least two samples");
    n_total += static_cast<long>(g.size());
    grand += std::accumulate(g.begin(), g.end(), 0.0);
  }
  grand /= n_total;
  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
    ssb += g.size() * (mean - grand) * (mean - grand);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  const double df_b = k - 1;
  const double df_w = static_cast<double>(n_total - k);
  if (ssw == 0.0)
    return ssb == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (ssb / df_b) / (ssw / df_w);
}

MeanSem mean_sem(const std::vector<double>& xs) {
  MeanSem out;
  out.n = static_cast<int>(xs.size());
  if (out.n == 0) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / out.n;
  if (out.n < 2) return out;
  double ss = 0.0;
  for (double v : xs) ss += (v - out.mean) * (v - out.mean);
  out.sem = std::sqrt(ss / (out.n - 1)) / std::sqrt(static_cast<double>(out.n));
  return out;
}

Vec firing_rates(const sr::SuccessorMap& m, int s, int a) {
  return m.row(s, a).transpose();
}

ProbeTemplate probe_template(const std::vector<const sr::SuccessorMap*>& maps,
                             const Vec& weights) {
  if (maps.empty() || static_cast<int>(maps.size()) != weights.size())
    throw ConfigError("probe_template: one weight per map required");
  ProbeTemplate t;
  t.n_actions = maps[0]->n_actions();
  t.rows = RowMat::Zero(maps[0]->data().rows(), maps[0]->data().cols());
  for (size_t i = 0; i < maps.size(); ++i) t.rows += weights[i] * maps[i]->data();
  return t;
}

FlickerTrace flicker_trace(const std::vector<FiringStep>& steps, const ProbeTemplate& pre,
                           const ProbeTemplate& post, int n_trials) {
  FlickerTrace out;
  std::vector<double> c_pre, c_post;
  for (const auto& step : steps) {
    const long row = static_cast<long>(step.s) * pre.n_actions + step.a;
    const Vec pre_row = pre.rows.row(row).transpose();
    const Vec post_row = post.rows.row(row).transpose();
    const auto cp = pearson(step.firing, pre_row);
    const auto cq = pearson(step.firing, post_row);
    if (!cp || !cq) {
      ++out.skipped_steps;
      continue;
    }
    out.step_trial.push_back(step.trial);
    c_pre.push_back(*cp);
    c_post.push_back(*cq);
  }
  const int n = static_cast<int>(c_pre.size());
  auto zscore = [&](std::vector<double>& xs) {
    const MeanSem ms = mean_sem(xs);
    double sd = ms.sem * std::sqrt(static_cast<double>(ms.n));
    if (sd == 0.0) {
      out.degenerate_z = true;  // constant series: flagged, not fatal
      sd = 1.0;
    }
    for (double& v : xs) v = (v - ms.mean) / sd;
  };
  if (n > 0) {
    zscore(c_pre);
    zscore(c_post);
  }
  out.z_diff.resize(n);
  for (int i = 0; i < n; ++i) out.z_diff[i] = c_post[i] - c_pre[i];

  out.trial_mean.assign(n_trials, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> sums(n_trials, 0.0);
  std::vector<int> counts(n_trials, 0);
  for (int i = 0; i < n; ++i) {
    if (out.step_trial[i] < 0 || out.step_trial[i] >= n_trials) continue;
    sums[out.step_trial[i]] += out.z_diff[i];
    ++counts[out.step_trial[i]];
  }
  for (int t = 0; t < n_trials; ++t)
    if (counts[t] > 0) out.trial_mean[t] = sums[t] / counts[t];
  return out;
}

std::optional<double> session_trial_spearman(const FlickerTrace& trace, int max_trial) {
  std::vector<double> xs, ys;
  for (int t = 0; t < max_trial && t < static_cast<int>(trace.trial_mean.size()); ++t) {
    if (std::isnan(trace.trial_mean[t])) continue;
    xs.push_back(t + 1);
    ys.push_back(trace.trial_mean[t]);
  }
  if (xs.size() < 2) return std::nullopt;
  return spearman(xs, ys);
}

Mat splitter_decode(const std::vector<std::pair<int, Vec>>& trials, int n_types,
                    int* excluded) {
  Mat counts = Mat::Zero(n_types, n_types);
  int skipped = 0;
  for (size_t j = 0; j < trials.size(); ++j) {
    const int actual = trials[j].first;
    // leave-one-out templates
    std::vector<Vec> templates(n_types);
    std::vector<int> n_per(n_types, 0);
    for (size_t i = 0; i < trials.size(); ++i) {
      if (i == j) continue;
      const int t = trials[i].first;
      if (n_per[t] == 0) templates[t] = Vec::Zero(trials[i].second.size());
      templates[t] += trials[i].second;
      ++n_per[t];
    }
    double best = -2.0;
    int decoded = -1;
    bool degenerate = false;
    for (int t = 0; t < n_types; ++t) {
      if (n_per[t] == 0) { degenerate = true; break; }
      templates[t] /= n_per[t];
      const auto c = pearson(trials[j].second, templates[t]);
      if (!c) { degenerate = true; break; }
      if (*c > best) { best = *c; decoded = t; }
    }
    if (degenerate || decoded < 0) {
      ++skipped;
      continue;
    }
    counts(actual, decoded) += 1.0;
  }
  if (excluded) *excluded = skipped;
  for (int r = 0; r < n_types; ++r) {
    const double row_sum = counts.row(r).sum();
    if (row_sum > 0.0) counts.row(r) /= row_sum;
  }
  return counts;
}

}  // namespace bsr::analysis
