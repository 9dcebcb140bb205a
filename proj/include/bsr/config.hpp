#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bsr/types.hpp"

namespace bsr {

enum class AgentKind { Bsr, Bsr2, Gsr, Ssr, SsrPlus, Ew, Kq, Gpi };
enum class EnvKind { GridMaze, PuddleWorld, ContinuousMaze, Forage, YMaze };
enum class Profile { Exp1, Exp2, Exp3, Forage, YMaze };
enum class UpdatePolicy { AllMaps, MostLikely, Sampled };
enum class OffsetMode { None, Constant, ConstantPlusCr };
enum class GpiRewardMode { Shared, Stored };
enum class ResampleScheme { Multinomial, Systematic };

std::string to_string(AgentKind k);
std::string to_string(EnvKind k);
std::string to_string(Profile p);
std::string to_string(UpdatePolicy p);
std::string to_string(OffsetMode m);
std::string to_string(GpiRewardMode m);
std::string to_string(ResampleScheme s);

AgentKind agent_kind_from_string(const std::string& s);
Profile profile_from_string(const std::string& s);

// Full parameterization of one run. Profiles fill in experiment defaults;
// any key can then be overridden explicitly (config file or CLI).
struct RunConfig {
  Profile profile = Profile::Exp1;
  AgentKind agent = AgentKind::Bsr;
  EnvKind env = EnvKind::GridMaze;
  std::uint64_t seed = 1;

  int k = 4;                    // max number of contexts / maps
  double gamma = 0.99;
  double epsilon = 0.0;         // annealing target
  int epsilon_anneal_episodes = 250;

  double alpha_sr = 0.005;
  double alpha_w = 1.0;
  double alpha_ws = 0.01;
  double c_ws = 1.0;
  double alpha_cr_start = 0.15;
  double alpha_cr_final = 0.0;
  int alpha_cr_horizon = 6000;  // episodes

  double alpha_dp = 2.0;
  double sigma_cr = 1.6;
  int filter_delay = 3;         // f
  int n_particles = 100;
  int particle_window = 10;

  UpdatePolicy update_policy = UpdatePolicy::AllMaps;
  OffsetMode offset_mode = OffsetMode::None;
  bool offset_per_episode = false;  // default: every step, inside the loop
  GpiRewardMode gpi_reward_mode = GpiRewardMode::Shared;
  ResampleScheme resample = ResampleScheme::Multinomial;

  int episodes = 4500;
  int episodes_per_task = 20;   // task-change interval (session length)
  int step_limit = 75;
  long long total_step_budget = 0;  // stop once this many env steps taken (0 = off)

  int replay_minibatch = 5;
  int buffer_capacity = 300;    // transitions (tabular ring)
  int buffer_episodes = 200;    // episode horizon (neural)

  // neural (continuous maze) settings
  int hidden_width = 150;
  int hidden_layers = 1;
  int sync_interval = 80;
  double dropout_rate = 0.1;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;

  // forage / ymaze
  int probe_steps = 75;
  int ymaze_pretrain_episodes = 500;
  int ymaze_blocks = 24;
  int ymaze_segment_episodes = 10;

  std::string layout_file;      // empty = built-in layout for the env kind
  bool trace_filter = false;    // emit per-step filter trace CSV

  void validate() const;        // throws ConfigError on violated invariants
};

// Experiment defaults (tabular/neural hyperparameters and schedules), with
// agent-kind adjustments (SSR forces k=1, SSR+ adds the constant offset, ...).
RunConfig profile_defaults(Profile profile, AgentKind agent);

// Flat JSON object; unknown keys are an error. Keys match the field names.
RunConfig config_from_json(const std::string& json_text);
void apply_json_overrides(RunConfig& cfg, const std::string& json_text);
void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_json(const RunConfig& cfg);

RunConfig load_config_file(const std::string& path);

}  // namespace bsr
