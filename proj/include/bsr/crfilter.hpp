#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bsr/config.hpp"
#include "bsr/rng.hpp"
#include "bsr/types.hpp"

namespace bsr::crfilter {

// Symmetric kernel of exponentiated discount factors, [g^f, ..., 1, ..., g^f].
struct CRKernel {
  Vec k;
  int f = 0;
  double gamma = 1.0;
};

CRKernel cr_kernel(double gamma, int f);

// Kernel-weighted reward average around a visited state. `mask` marks slots
// holding real steps; zero-padded slots contribute no normalization mass.
// Returns nullopt when no real step falls under the kernel.
std::optional<double> cr_value(const Vec& rewards, const Vec& mask,
                               const CRKernel& kern, bool normalize);

double gaussian_likelihood(double v, double mean, double sigma);

// CRP proposal over bounded context slots. `counts` holds per-slot window
// counts (zero = unused slot); existing slots draw m_k/(t_obs-1+alpha), the
// "new table" mass goes to a uniformly chosen unused slot, or is spread
// proportionally over existing slots when all are in use.
int crp_propose(const std::vector<int>& counts, int t_obs, double alpha_dp, Rng& rng);

// Delta-rule update of the winning context's CR map.
void cr_map_update(Vec& w_cr, const Vec& phi, double v_cr, double alpha_cr);
void cr_map_update(Vec& w_cr, int index, double v_cr, double alpha_cr);

int winner_take_all(const Vec& omega);
int winner_take_all(const std::vector<int>& assignments, const Vec& norm_weights, int k);

// Conjugate Gaussian linear model posterior over CR map weights (dense form).
// Updates use the gain form of S' = [S^-1 + phi phi^T / s^2]^-1; tests verify
// it against the explicit precision-form closed form.
class GaussianPosterior {
 public:
  GaussianPosterior(Vec mean, Mat cov);
  static GaussianPosterior standard(int dim);

  void update(const Vec& phi, double v, double sigma);
  std::pair<double, double> predictive(const Vec& phi, double sigma) const;

  const Vec& mean() const { return mean_; }
  const Mat& cov() const { return cov_; }

 private:
  Vec mean_;
  Mat cov_;
};

// One-hot feature specialization: with a diagonal prior the posterior stays
// diagonal, so coordinates update independently.
struct DiagGaussianPosterior {
  Vec mean;
  Vec var;

  static DiagGaussianPosterior standard(int dim) {
    return {Vec::Zero(dim), Vec::Ones(dim)};
  }
  void update(int j, double v, double sigma) {
    const double prec = 1.0 / var[j] + 1.0 / (sigma * sigma);
    const double var_new = 1.0 / prec;
    mean[j] = var_new * (mean[j] / var[j] + v / (sigma * sigma));
    var[j] = var_new;
  }
  std::pair<double, double> predictive(int j, double sigma) const {
    return {mean[j], var[j] + sigma * sigma};
  }
};

// Window of recent context assignments per particle, with CRP proposals,
// importance weighting, and per-step resampling. Weighting is split out so
// BSR (shared CR maps) and GSR (per-particle posteriors) can plug in their
// own likelihoods.
class ParticleFilter {
 public:
  ParticleFilter(int n_particles, int window, int k, double alpha_dp,
                 ResampleScheme scheme, Rng& init);

  struct Outcome {
    Vec omega;
    int winner = 0;
    bool degenerate = false;
  };

  // Phase 1: one CRP proposal per particle (single observation) or a joint
  // sequence of `m` proposals (episode-end flush).
  const std::vector<int>& propose(Rng& proposal_rng);
  const std::vector<std::vector<int>>& propose_joint(int m, Rng& proposal_rng);

  // Phase 2: normalize the caller-computed weights, recompute omega from the
  // newest assignments, resample rows, and slide the window. resample_src()
  // afterwards maps new particle index -> source particle index so callers
  // can permute side state (GSR posteriors) the same way.
  Outcome commit(const std::vector<double>& weights, Rng& resample_rng);

  int n_particles() const { return n_particles_; }
  int window() const { return window_; }
  int k() const { return k_; }
  const std::vector<std::vector<int>>& rows() const { return rows_; }
  const std::vector<int>& resample_src() const { return resample_src_; }
  long degenerate_steps() const { return degenerate_steps_; }

 private:
  std::vector<int> window_counts(int particle) const;
  void resample_indices(const std::vector<double>& norm_w, Rng& rng);

  int n_particles_, window_, k_;
  double alpha_dp_;
  ResampleScheme scheme_;
  std::vector<std::vector<int>> rows_, rows_next_;
  std::vector<int> proposals_;
  std::vector<std::vector<int>> joint_proposals_;
  int pending_len_ = 0;  // 1 after propose(), m after propose_joint()
  std::vector<int> resample_src_;
  long degenerate_steps_ = 0;
};

}  // namespace bsr::crfilter
