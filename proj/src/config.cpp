#include "bsr/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

namespace bsr {

using nlohmann::json;

std::string to_string(AgentKind k) {
  switch (k) {
    case AgentKind::Bsr: return "bsr";
    case AgentKind::Bsr2: return "bsr2";
    case AgentKind::Gsr: return "gsr";
    case AgentKind::Ssr: return "ssr";
    case AgentKind::SsrPlus: return "ssr_plus";
    case AgentKind::Ew: return "ew";
    case AgentKind::Kq: return "kq";
    case AgentKind::Gpi: return "gpi";
  }
  return "?";
}

std::string to_string(EnvKind k) {
  switch (k) {
    case EnvKind::GridMaze: return "grid_maze";
    case EnvKind::PuddleWorld: return "puddle_world";
    case EnvKind::ContinuousMaze: return "continuous_maze";
    case EnvKind::Forage: return "forage";
    case EnvKind::YMaze: return "ymaze";
  }
  return "?";
}

std::string to_string(Profile p) {
  switch (p) {
    case Profile::Exp1: return "exp1";
    case Profile::Exp2: return "exp2";
    case Profile::Exp3: return "exp3";
    case Profile::Forage: return "forage";
    case Profile::YMaze: return "ymaze";
  }
  return "?";
}

std::string to_string(UpdatePolicy p) {
  switch (p) {
    case UpdatePolicy::AllMaps: return "all";
    case UpdatePolicy::MostLikely: return "most_likely";
    case UpdatePolicy::Sampled: return "sampled";
  }
  return "?";
}

std::string to_string(OffsetMode m) {
  switch (m) {
    case OffsetMode::None: return "none";
    case OffsetMode::Constant: return "constant";
    case OffsetMode::ConstantPlusCr: return "constant_cr";
  }
  return "?";
}

std::string to_string(GpiRewardMode m) {
  return m == GpiRewardMode::Shared ? "shared" : "stored";
}

std::string to_string(ResampleScheme s) {
  return s == ResampleScheme::Multinomial ? "multinomial" : "systematic";
}

namespace {

template <typename E>
E parse_enum(const std::string& s, const std::map<std::string, E>& table,
             const char* what) {
  auto it = table.find(s);
  if (it == table.end()) throw ConfigError(std::string("unknown ") + what + ": '" + s + "'");
  return it->second;
}

const std::map<std::string, AgentKind> kAgentNames = {
    {"bsr", AgentKind::Bsr},   {"bsr2", AgentKind::Bsr2},
    {"gsr", AgentKind::Gsr},   {"ssr", AgentKind::Ssr},
    {"ssr_plus", AgentKind::SsrPlus}, {"ssr+", AgentKind::SsrPlus},
    {"ew", AgentKind::Ew},     {"kq", AgentKind::Kq},
    {"kg", AgentKind::Kq},     {"gpi", AgentKind::Gpi}};

const std::map<std::string, EnvKind> kEnvNames = {
    {"grid_maze", EnvKind::GridMaze},
    {"puddle_world", EnvKind::PuddleWorld},
    {"continuous_maze", EnvKind::ContinuousMaze},
    {"forage", EnvKind::Forage},
    {"ymaze", EnvKind::YMaze}};

const std::map<std::string, Profile> kProfileNames = {
    {"exp1", Profile::Exp1}, {"exp2", Profile::Exp2}, {"exp3", Profile::Exp3},
    {"forage", Profile::Forage}, {"ymaze", Profile::YMaze}};

const std::map<std::string, UpdatePolicy> kUpdateNames = {
    {"all", UpdatePolicy::AllMaps},
    {"most_likely", UpdatePolicy::MostLikely},
    {"sampled", UpdatePolicy::Sampled}};

const std::map<std::string, OffsetMode> kOffsetNames = {
    {"none", OffsetMode::None},
    {"constant", OffsetMode::Constant},
    {"constant_cr", OffsetMode::ConstantPlusCr}};

const std::map<std::string, GpiRewardMode> kGpiNames = {
    {"shared", GpiRewardMode::Shared}, {"stored", GpiRewardMode::Stored}};

const std::map<std::string, ResampleScheme> kResampleNames = {
    {"multinomial", ResampleScheme::Multinomial},
    {"systematic", ResampleScheme::Systematic}};

EnvKind env_for_profile(Profile p) {
  switch (p) {
    case Profile::Exp1: return EnvKind::GridMaze;
    case Profile::Exp2: return EnvKind::PuddleWorld;
    case Profile::Exp3: return EnvKind::ContinuousMaze;
    case Profile::Forage: return EnvKind::Forage;
    case Profile::YMaze: return EnvKind::YMaze;
  }
  return EnvKind::GridMaze;
}

// Best-performing (epsilon, alpha_sr) per agent from the experiment tables;
// these are the settings the sweep selected, baked in as profile defaults.
void apply_best_settings(RunConfig& c) {
  switch (c.profile) {
    case Profile::Exp1:
      switch (c.agent) {
        case AgentKind::Bsr:
        case AgentKind::Bsr2:
        case AgentKind::Gsr: c.epsilon = 0.0; c.alpha_sr = 0.005; break;
        case AgentKind::Ssr:
        case AgentKind::SsrPlus:
        case AgentKind::Ew: c.epsilon = 0.1; c.alpha_sr = 0.001; break;
        case AgentKind::Kq: c.epsilon = 0.05; c.alpha_sr = 0.001; break;
        case AgentKind::Gpi: c.epsilon = 0.05; c.alpha_sr = 0.001; break;
      }
      break;
    case Profile::Exp2:
      switch (c.agent) {
        case AgentKind::Bsr:
        case AgentKind::Bsr2:
        case AgentKind::Gsr:
          c.offset_mode = OffsetMode::ConstantPlusCr;
          c.epsilon = 0.05; c.alpha_sr = 0.05;
          break;
        case AgentKind::Ssr: c.epsilon = 0.6; c.alpha_sr = 0.005; break;
        case AgentKind::SsrPlus:
          c.offset_mode = OffsetMode::Constant;
          c.epsilon = 0.25; c.alpha_sr = 0.005;
          break;
        case AgentKind::Ew: c.epsilon = 0.55; c.alpha_sr = 0.005; break;
        case AgentKind::Kq: break;  // rejected later: needs signalled goals
        case AgentKind::Gpi:
          c.gpi_reward_mode = GpiRewardMode::Stored;
          c.epsilon = 0.55; c.alpha_sr = 0.01;
          break;
      }
      break;
    case Profile::Exp3:
      switch (c.agent) {
        case AgentKind::Bsr:
        case AgentKind::Bsr2:
        case AgentKind::Gsr:
          c.offset_mode = OffsetMode::ConstantPlusCr;
          c.epsilon = 0.3;
          break;
        case AgentKind::Ssr: c.epsilon = 0.45; break;
        case AgentKind::SsrPlus:
          c.offset_mode = OffsetMode::Constant;
          c.epsilon = 0.4;
          break;
        case AgentKind::Ew: c.epsilon = 0.45; break;
        case AgentKind::Kq: break;
        case AgentKind::Gpi:
          c.gpi_reward_mode = GpiRewardMode::Stored;
          c.epsilon = 0.35;
          break;
      }
      break;
    case Profile::Forage:
    case Profile::YMaze:
      break;  // single published setting for all agents
  }
}

}  // namespace

AgentKind agent_kind_from_string(const std::string& s) {
  return parse_enum(s, kAgentNames, "agent");
}

Profile profile_from_string(const std::string& s) {
  return parse_enum(s, kProfileNames, "profile");
}

RunConfig profile_defaults(Profile profile, AgentKind agent) {
  RunConfig c;
  c.profile = profile;
  c.agent = agent;
  c.env = env_for_profile(profile);

  switch (profile) {
    case Profile::Exp1:
      break;  // struct defaults are the Experiment I settings
    case Profile::Exp2:
      c.episodes_per_task = 30;
      break;
    case Profile::Exp3:
      c.episodes = 1000000000;  // the step budget terminates the run
      c.episodes_per_task = 30;
      c.total_step_budget = 250000;
      c.filter_delay = 4;
      c.particle_window = 50;
      c.replay_minibatch = 15;
      c.alpha_w = 0.005;
      c.alpha_sr = 0.0005;
      c.alpha_cr_start = 0.005;
      c.alpha_cr_final = 0.001;
      c.alpha_cr_horizon = 4000;
      c.update_policy = UpdatePolicy::MostLikely;
      break;
    case Profile::Forage:
      c.episodes_per_task = 30;
      c.epsilon = 0.2;
      c.alpha_w = 0.5;
      c.alpha_sr = 0.1;
      c.sigma_cr = 1.0;
      break;
    case Profile::YMaze:
      c.epsilon = 0.2;
      c.alpha_w = 0.5;
      c.alpha_sr = 0.1;
      c.sigma_cr = 1.0;
      c.episodes_per_task = 20;  // pre-training phase cadence
      c.episodes = 500 + 24 * 4 * 10;
      break;
  }

  apply_best_settings(c);

  switch (agent) {
    case AgentKind::Ssr:
    case AgentKind::SsrPlus:
      c.k = 1;
      break;
    default:
      break;
  }
  return c;
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(gamma >= 0.0 && gamma <= 1.0, "gamma must be in [0,1]");
  require(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must be in [0,1]");
  require(alpha_sr >= 0.0 && alpha_w >= 0.0 && alpha_ws >= 0.0 &&
              alpha_cr_start >= 0.0 && alpha_cr_final >= 0.0,
          "learning rates must be nonnegative");
  require(alpha_dp > 0.0, "alpha_dp must be positive");
  require(sigma_cr > 0.0, "sigma_cr must be positive");
  require(k >= 1, "k must be at least 1");
  require(n_particles >= 1, "n_particles must be at least 1");
  require(particle_window >= 1, "particle_window must be at least 1");
  require(filter_delay >= 1, "filter delay f must be positive");
  require(episodes >= 0, "episodes must be nonnegative");
  require(episodes_per_task >= 1, "episodes_per_task must be at least 1");
  require(step_limit >= 1, "step_limit must be at least 1");
  require(replay_minibatch >= 0, "replay_minibatch must be nonnegative");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0,1)");
  require(epsilon_anneal_episodes >= 1, "epsilon_anneal_episodes must be at least 1");

  if (agent == AgentKind::Ssr || agent == AgentKind::SsrPlus)
    require(k == 1, "SSR variants use a single map (k=1)");
  if (agent == AgentKind::Gsr) {
    require(env != EnvKind::ContinuousMaze, "GSR is tabular-only");
    require(offset_mode != OffsetMode::ConstantPlusCr,
            "GSR has no point-estimate CR maps; constant_cr offset unsupported");
  }
  if (agent == AgentKind::Kq)
    require(env == EnvKind::GridMaze || env == EnvKind::YMaze,
            "KQ/KG needs signalled goals (grid maze) or trial types (ymaze)");
  if (env == EnvKind::ContinuousMaze)
    require(total_step_budget > 0, "continuous maze runs are step-budgeted");
}

namespace {

void apply_json_object(RunConfig& c, const json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = it.value();
    auto str = [&]() -> std::string { return v.get<std::string>(); };
    auto num = [&]() -> double {
      if (!v.is_number()) throw ConfigError("config key '" + key + "' expects a number");
      return v.get<double>();
    };
    auto integer = [&]() -> long long {
      if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' expects an integer");
      return v.get<long long>();
    };
    auto boolean = [&]() -> bool {
      if (v.is_boolean()) return v.get<bool>();
      throw ConfigError("config key '" + key + "' expects a boolean");
    };

    if (key == "profile" || key == "agent") continue;  // consumed by caller
    else if (key == "env") c.env = parse_enum(str(), kEnvNames, "env");
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(integer());
    else if (key == "k") c.k = static_cast<int>(integer());
    else if (key == "gamma") c.gamma = num();
    else if (key == "epsilon") c.epsilon = num();
    else if (key == "epsilon_anneal_episodes") c.epsilon_anneal_episodes = static_cast<int>(integer());
    else if (key == "alpha_sr") c.alpha_sr = num();
    else if (key == "alpha_w") c.alpha_w = num();
    else if (key == "alpha_ws") c.alpha_ws = num();
    else if (key == "c_ws") c.c_ws = num();
    else if (key == "alpha_cr_start") c.alpha_cr_start = num();
    else if (key == "alpha_cr_final") c.alpha_cr_final = num();
    else if (key == "alpha_cr_horizon") c.alpha_cr_horizon = static_cast<int>(integer());
    else if (key == "alpha_dp") c.alpha_dp = num();
    else if (key == "sigma_cr") c.sigma_cr = num();
    else if (key == "filter_delay") c.filter_delay = static_cast<int>(integer());
    else if (key == "n_particles") c.n_particles = static_cast<int>(integer());
    else if (key == "particle_window") c.particle_window = static_cast<int>(integer());
    else if (key == "update_policy") c.update_policy = parse_enum(str(), kUpdateNames, "update_policy");
    else if (key == "offset_mode") c.offset_mode = parse_enum(str(), kOffsetNames, "offset_mode");
    else if (key == "offset_per_episode") c.offset_per_episode = boolean();
    else if (key == "gpi_reward_mode") c.gpi_reward_mode = parse_enum(str(), kGpiNames, "gpi_reward_mode");
    else if (key == "resample") c.resample = parse_enum(str(), kResampleNames, "resample");
    else if (key == "episodes") c.episodes = static_cast<int>(integer());
    else if (key == "episodes_per_task") c.episodes_per_task = static_cast<int>(integer());
    else if (key == "step_limit") c.step_limit = static_cast<int>(integer());
    else if (key == "total_step_budget") c.total_step_budget = integer();
    else if (key == "replay_minibatch") c.replay_minibatch = static_cast<int>(integer());
    else if (key == "buffer_capacity") c.buffer_capacity = static_cast<int>(integer());
    else if (key == "buffer_episodes") c.buffer_episodes = static_cast<int>(integer());
    else if (key == "hidden_width") c.hidden_width = static_cast<int>(integer());
    else if (key == "hidden_layers") c.hidden_layers = static_cast<int>(integer());
    else if (key == "sync_interval") c.sync_interval = static_cast<int>(integer());
    else if (key == "dropout_rate") c.dropout_rate = num();
    else if (key == "rms_decay") c.rms_decay = num();
    else if (key == "rms_epsilon") c.rms_epsilon = num();
    else if (key == "probe_steps") c.probe_steps = static_cast<int>(integer());
    else if (key == "ymaze_pretrain_episodes") c.ymaze_pretrain_episodes = static_cast<int>(integer());
    else if (key == "ymaze_blocks") c.ymaze_blocks = static_cast<int>(integer());
    else if (key == "ymaze_segment_episodes") c.ymaze_segment_episodes = static_cast<int>(integer());
    else if (key == "layout_file") c.layout_file = str();
    else if (key == "trace_filter") c.trace_filter = boolean();
    else throw ConfigError("unknown config key: '" + key + "'");
  }
}

json parse_or_throw(const std::string& text) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  return j;
}

}  // namespace

RunConfig config_from_json(const std::string& json_text) {
  json j = parse_or_throw(json_text);
  Profile profile = Profile::Exp1;
  AgentKind agent = AgentKind::Bsr;
  if (j.contains("profile")) profile = profile_from_string(j["profile"].get<std::string>());
  if (j.contains("agent")) agent = agent_kind_from_string(j["agent"].get<std::string>());
  RunConfig c = profile_defaults(profile, agent);
  apply_json_object(c, j);
  return c;
}

void apply_json_overrides(RunConfig& cfg, const std::string& json_text) {
  json j = parse_or_throw(json_text);
  if (j.contains("profile") || j.contains("agent"))
    throw ConfigError("profile/agent cannot be changed by an override file");
  apply_json_object(cfg, j);
}

void apply_key_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded() || v.is_object() || v.is_array()) v = value;  // raw string
  json obj;
  obj[key] = v;
  if (key == "profile" || key == "agent")
    throw ConfigError("profile/agent must be set before other keys");
  apply_json_object(cfg, obj);
}

std::string config_to_json(const RunConfig& c) {
  json j;
  j["profile"] = to_string(c.profile);
  j["agent"] = to_string(c.agent);
  j["env"] = to_string(c.env);
  j["seed"] = c.seed;
  j["k"] = c.k;
  j["gamma"] = c.gamma;
  j["epsilon"] = c.epsilon;
  j["epsilon_anneal_episodes"] = c.epsilon_anneal_episodes;
  j["alpha_sr"] = c.alpha_sr;
  j["alpha_w"] = c.alpha_w;
  j["alpha_ws"] = c.alpha_ws;
  j["c_ws"] = c.c_ws;
  j["alpha_cr_start"] = c.alpha_cr_start;
  j["alpha_cr_final"] = c.alpha_cr_final;
  j["alpha_cr_horizon"] = c.alpha_cr_horizon;
  j["alpha_dp"] = c.alpha_dp;
  j["sigma_cr"] = c.sigma_cr;
  j["filter_delay"] = c.filter_delay;
  j["n_particles"] = c.n_particles;
  j["particle_window"] = c.particle_window;
  j["update_policy"] = to_string(c.update_policy);
  j["offset_mode"] = to_string(c.offset_mode);
  j["offset_per_episode"] = c.offset_per_episode;
  j["gpi_reward_mode"] = to_string(c.gpi_reward_mode);
  j["resample"] = to_string(c.resample);
  j["episodes"] = c.episodes;
  j["episodes_per_task"] = c.episodes_per_task;
  j["step_limit"] = c.step_limit;
  j["total_step_budget"] = c.total_step_budget;
  j["replay_minibatch"] = c.replay_minibatch;
  j["buffer_capacity"] = c.buffer_capacity;
  j["buffer_episodes"] = c.buffer_episodes;
  j["hidden_width"] = c.hidden_width;
  j["hidden_layers"] = c.hidden_layers;
  j["sync_interval"] = c.sync_interval;
  j["dropout_rate"] = c.dropout_rate;
  j["rms_decay"] = c.rms_decay;
  j["rms_epsilon"] = c.rms_epsilon;
  j["probe_steps"] = c.probe_steps;
  j["ymaze_pretrain_episodes"] = c.ymaze_pretrain_episodes;
  j["ymaze_blocks"] = c.ymaze_blocks;
  j["ymaze_segment_episodes"] = c.ymaze_segment_episodes;
  j["layout_file"] = c.layout_file;
  j["trace_filter"] = c.trace_filter;
  return j.dump(2);
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

}  // namespace bsr
