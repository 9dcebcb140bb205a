#include "bsr/crfilter.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace bsr::crfilter {

CRKernel cr_kernel(double gamma, int f) {
  if (f < 1) throw ConfigError("cr_kernel: filter delay f must be positive");
  if (gamma <= 0.0 || gamma > 1.0) throw ConfigError("cr_kernel: gamma must be in (0,1]");
  CRKernel k;
  k.f = f;
  k.gamma = gamma;
  k.k = Vec(2 * f + 1);
  for (int i = 0; i <= 2 * f; ++i) k.k[i] = std::pow(gamma, std::abs(i - f));
  return k;
}

std::optional<double> cr_value(const Vec& rewards, const Vec& mask,
                               const CRKernel& kern, bool normalize) {
  if (rewards.size() != kern.k.size() || mask.size() != kern.k.size())
    throw ConfigError("cr_value: window size must be 2f+1");
  const double num = rewards.dot(kern.k);
  if (!normalize) return num;
  const double denom = mask.dot(kern.k);
  if (denom <= 0.0) return std::nullopt;  // no real step under the kernel
  return num / denom;
}

double gaussian_likelihood(double v, double mean, double sigma) {
  const double z = (v - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * M_PI));
}

int crp_propose(const std::vector<int>& counts, int t_obs, double alpha_dp, Rng& rng) {
  const int k = static_cast<int>(counts.size());
  const double denom = static_cast<double>(t_obs - 1) + alpha_dp;
  const double u = rng.uniform01() * denom;
  double cum = 0.0;
  for (int i = 0; i < k; ++i) {
    cum += counts[i];
    if (counts[i] > 0 && u < cum) return i;
  }
  // "new table": pick an unused slot uniformly; with all slots occupied the
  // new mass is redistributed proportionally to the existing counts.
  std::vector<int> unused;
  for (int i = 0; i < k; ++i)
    if (counts[i] == 0) unused.push_back(i);
  if (!unused.empty()) return unused[rng.below(static_cast<int>(unused.size()))];
  std::vector<double> w(counts.begin(), counts.end());
  return rng.categorical(w);
}

void cr_map_update(Vec& w_cr, const Vec& phi, double v_cr, double alpha_cr) {
  w_cr += alpha_cr * (v_cr - phi.dot(w_cr)) * phi;
}

void cr_map_update(Vec& w_cr, int index, double v_cr, double alpha_cr) {
  w_cr[index] += alpha_cr * (v_cr - w_cr[index]);
}

int winner_take_all(const Vec& omega) {
  int best = 0;
  for (int i = 1; i < omega.size(); ++i)
    if (omega[i] > omega[best]) best = i;
  return best;
}

int winner_take_all(const std::vector<int>& assignments, const Vec& norm_weights, int k) {
  Vec omega = Vec::Zero(k);
  for (size_t p = 0; p < assignments.size(); ++p) omega[assignments[p]] += norm_weights[p];
  return winner_take_all(omega);
}

GaussianPosterior::GaussianPosterior(Vec mean, Mat cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols() || cov_.rows() != mean_.size())
    throw ConfigError("GaussianPosterior: dimension mismatch");
}

GaussianPosterior GaussianPosterior::standard(int dim) {
  return {Vec::Zero(dim), Mat::Identity(dim, dim)};
}

void GaussianPosterior::update(const Vec& phi, double v, double sigma) {
  const Vec cov_phi = cov_ * phi;
  const double s = sigma * sigma + phi.dot(cov_phi);
  if (!(s > 0.0) || !std::isfinite(s))
    throw NumericError("gsr posterior update: nonpositive innovation variance");
  const double err = v - phi.dot(mean_);
  mean_ += cov_phi * (err / s);
  cov_ -= (cov_phi * cov_phi.transpose()) / s;
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::LLT<Mat> llt(cov_);
  if (llt.info() != Eigen::Success)
    throw NumericError("gsr posterior update: covariance lost positive definiteness");
}

std::pair<double, double> GaussianPosterior::predictive(const Vec& phi, double sigma) const {
  return {phi.dot(mean_), phi.dot(cov_ * phi) + sigma * sigma};
}

ParticleFilter::ParticleFilter(int n_particles, int window, int k, double alpha_dp,
                               ResampleScheme scheme, Rng& init)
    : n_particles_(n_particles), window_(window), k_(k), alpha_dp_(alpha_dp),
      scheme_(scheme) {
  rows_.assign(n_particles_, std::vector<int>(window_));
  for (auto& row : rows_)
    for (int& c : row) c = init.below(k_);
  rows_next_ = rows_;
  proposals_.assign(n_particles_, 0);
  joint_proposals_.assign(n_particles_, {});
  resample_src_.assign(n_particles_, 0);
}

std::vector<int> ParticleFilter::window_counts(int particle) const {
  std::vector<int> counts(k_, 0);
  for (int c : rows_[particle]) ++counts[c];
  return counts;
}

const std::vector<int>& ParticleFilter::propose(Rng& proposal_rng) {
  for (int p = 0; p < n_particles_; ++p) {
    std::vector<int> counts = window_counts(p);
    proposals_[p] = crp_propose(counts, window_ + 1, alpha_dp_, proposal_rng);
  }
  pending_len_ = 1;
  return proposals_;
}

const std::vector<std::vector<int>>& ParticleFilter::propose_joint(int m, Rng& proposal_rng) {
  for (int p = 0; p < n_particles_; ++p) {
    auto& pending = joint_proposals_[p];
    pending.clear();
    // The visible window slides one entry per proposal, so every draw sees
    // exactly `window_` past assignments, as in the per-step path.
    std::vector<int> counts = window_counts(p);
    for (int j = 0; j < m; ++j) {
      const int c = crp_propose(counts, window_ + 1, alpha_dp_, proposal_rng);
      pending.push_back(c);
      ++counts[c];
      const int evicted = j < window_ ? rows_[p][j] : pending[j - window_];
      --counts[evicted];
    }
  }
  pending_len_ = m;
  return joint_proposals_;
}

void ParticleFilter::resample_indices(const std::vector<double>& norm_w, Rng& rng) {
  std::vector<double> cum(n_particles_);
  double acc = 0.0;
  for (int p = 0; p < n_particles_; ++p) {
    acc += norm_w[p];
    cum[p] = acc;
  }
  auto pick = [&](double u) {
    int lo = 0, hi = n_particles_ - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (u < cum[mid]) hi = mid; else lo = mid + 1;
    }
    return lo;
  };
  if (scheme_ == ResampleScheme::Multinomial) {
    for (int p = 0; p < n_particles_; ++p) resample_src_[p] = pick(rng.uniform01() * acc);
  } else {
    const double step = acc / n_particles_;
    double u = rng.uniform01() * step;
    for (int p = 0; p < n_particles_; ++p) {
      resample_src_[p] = pick(u);
      u += step;
    }
  }
}

ParticleFilter::Outcome ParticleFilter::commit(const std::vector<double>& weights,
                                               Rng& resample_rng) {
  Outcome out;
  if (static_cast<int>(weights.size()) != n_particles_)
    throw ConfigError("particle filter: one weight per particle required");

  double total = 0.0;
  for (double w : weights) total += (std::isfinite(w) && w > 0.0) ? w : 0.0;

  std::vector<double> norm(n_particles_);
  if (total <= 0.0) {
    std::fill(norm.begin(), norm.end(), 1.0 / n_particles_);
    out.degenerate = true;
    ++degenerate_steps_;
  } else {
    for (int p = 0; p < n_particles_; ++p) {
      const double w = weights[p];
      norm[p] = (std::isfinite(w) && w > 0.0) ? w / total : 0.0;
    }
  }

  // omega from pre-resampling weights and the newest proposed assignment
  out.omega = Vec::Zero(k_);
  for (int p = 0; p < n_particles_; ++p) {
    const int newest = pending_len_ == 1 ? proposals_[p] : joint_proposals_[p].back();
    out.omega[newest] += norm[p];
  }
  out.winner = winner_take_all(out.omega);

  resample_indices(norm, resample_rng);

  for (int p = 0; p < n_particles_; ++p) {
    const int src = resample_src_[p];
    auto& dst = rows_next_[p];
    const auto& old_row = rows_[src];
    dst.clear();
    if (pending_len_ == 1) {
      dst.insert(dst.end(), old_row.begin() + 1, old_row.end());
      dst.push_back(proposals_[src]);
    } else {
      const auto& pending = joint_proposals_[src];
      const int drop = pending_len_;
      if (drop < window_) {
        dst.insert(dst.end(), old_row.begin() + drop, old_row.end());
        dst.insert(dst.end(), pending.begin(), pending.end());
      } else {
        dst.insert(dst.end(), pending.end() - window_, pending.end());
      }
    }
  }
  rows_.swap(rows_next_);
  pending_len_ = 0;
  return out;
}

}  // namespace bsr::crfilter
