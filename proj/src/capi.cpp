#include "bsr/bsr_c.h"

#include <cstring>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bsr/config.hpp"
#include "bsr/harness.hpp"

using nlohmann::json;

struct bsr_config {
  bsr::RunConfig cfg;
};

struct bsr_result {
  bsr::harness::RunArtifacts artifacts;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return BSR_OK;
  } catch (const bsr::ConfigError& e) {
    set_error(e.what());
    return BSR_ERR_CONFIG;
  } catch (const bsr::NumericError& e) {
    set_error(e.what());
    return BSR_ERR_NUMERIC;
  } catch (const std::exception& e) {
    set_error(e.what());
    return BSR_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* bsr_status_name(int status) {
  switch (status) {
    case BSR_OK: return "ok";
    case BSR_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case BSR_ERR_CONFIG: return "config_error";
    case BSR_ERR_IO: return "io_error";
    case BSR_ERR_NUMERIC: return "numeric_error";
    case BSR_ERR_INTERNAL: return "internal_error";
  }
  return "unknown";
}

const char* bsr_last_error(void) { return g_last_error.c_str(); }

bsr_config* bsr_config_create(const char* profile, const char* agent) {
  if (!profile || !agent) {
    set_error("profile and agent are required");
    return nullptr;
  }
  bsr_config* out = nullptr;
  guarded([&] {
    out = new bsr_config{bsr::profile_defaults(bsr::profile_from_string(profile),
                                               bsr::agent_kind_from_string(agent))};
  });
  return out;
}

bsr_config* bsr_config_load(const char* path) {
  if (!path) {
    set_error("path is required");
    return nullptr;
  }
  bsr_config* out = nullptr;
  guarded([&] { out = new bsr_config{bsr::load_config_file(path)}; });
  return out;
}

int bsr_config_set(bsr_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    set_error("null argument");
    return BSR_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] { bsr::apply_key_value(cfg->cfg, key, value); });
}

int bsr_config_apply_file(bsr_config* cfg, const char* path) {
  if (!cfg || !path) {
    set_error("null argument");
    return BSR_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw bsr::ConfigError(std::string("cannot open config file: ") + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    bsr::apply_json_overrides(cfg->cfg, text);
  });
}

char* bsr_config_to_json(const bsr_config* cfg) {
  if (!cfg) {
    set_error("null config");
    return nullptr;
  }
  return dup_string(bsr::config_to_json(cfg->cfg));
}

void bsr_config_free(bsr_config* cfg) { delete cfg; }
void bsr_string_free(char* s) { std::free(s); }

int bsr_run(const bsr_config* cfg, const char* out_dir, bsr_result** result) {
  if (!cfg) {
    set_error("null config");
    return BSR_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto artifacts = bsr::harness::run_experiment(cfg->cfg);
    if (out_dir) bsr::harness::write_artifacts(artifacts, out_dir);
    if (result) *result = new bsr_result{std::move(artifacts)};
  });
}

int64_t bsr_result_episodes(const bsr_result* r) {
  return r ? static_cast<int64_t>(r->artifacts.episodes.size()) : 0;
}

double bsr_result_total_steps(const bsr_result* r) {
  return r ? static_cast<double>(r->artifacts.total_steps) : 0.0;
}

double bsr_result_total_return(const bsr_result* r) {
  return r ? r->artifacts.total_return : 0.0;
}

int bsr_result_episode_steps(const bsr_result* r, int64_t episode) {
  if (!r || episode < 0 || episode >= static_cast<int64_t>(r->artifacts.episodes.size()))
    return -1;
  return r->artifacts.episodes[episode].steps;
}

double bsr_result_episode_return(const bsr_result* r, int64_t episode) {
  if (!r || episode < 0 || episode >= static_cast<int64_t>(r->artifacts.episodes.size()))
    return 0.0;
  return r->artifacts.episodes[episode].ret;
}

void bsr_result_free(bsr_result* r) { delete r; }

int bsr_sweep(const char* spec_json, const char* out_dir, int jobs) {
  if (!spec_json || !out_dir) {
    set_error("spec and out_dir are required");
    return BSR_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    json j = json::parse(spec_json, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw bsr::ConfigError("sweep spec must be a JSON object");
    bsr::harness::SweepSpec spec;
    if (j.contains("profile"))
      spec.profile = bsr::profile_from_string(j["profile"].get<std::string>());
    if (!j.contains("agents") || !j["agents"].is_array())
      throw bsr::ConfigError("sweep spec needs an 'agents' array");
    for (const auto& a : j["agents"])
      spec.agents.push_back(bsr::agent_kind_from_string(a.get<std::string>()));
    if (j.contains("epsilons"))
      for (const auto& e : j["epsilons"]) spec.epsilons.push_back(e.get<double>());
    if (j.contains("alphas"))
      for (const auto& a : j["alphas"]) spec.alphas.push_back(a.get<double>());
    if (j.contains("seeds")) spec.seeds = j["seeds"].get<int>();
    if (j.contains("base_seed")) spec.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("overrides")) spec.overrides_json = j["overrides"].dump();
    for (const auto& key : {"profile", "agents", "epsilons", "alphas", "seeds",
                            "base_seed", "overrides"})
      (void)key;

    const auto summary = bsr::harness::sweep(spec, jobs);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "sweep_summary.txt");
    if (!out) throw bsr::ConfigError("cannot write sweep summary");
    out << summary.to_text();
  });
}

int bsr_analyze(const char* kind, const char* in_dir, const char* out_path) {
  if (!kind || !in_dir || !out_path) {
    set_error("kind, in_dir and out_path are required");
    return BSR_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const std::string k = kind;
    if (k == "flicker") bsr::harness::analyze_flicker(in_dir, out_path);
    else if (k == "splitter") bsr::harness::analyze_splitter(in_dir, out_path);
    else if (k == "summary") bsr::harness::analyze_summary(in_dir, out_path);
    else throw bsr::ConfigError("unknown analysis kind: " + k);
  });
}

int bsr_oracle_check(char** report) {
  std::string text;
  int failures = 0;
  const int status = guarded([&] { failures = bsr::harness::oracle_check(&text); });
  if (report) *report = dup_string(text);
  if (status != BSR_OK) return status;
  if (failures > 0) {
    set_error("oracle self-check failed");
    return BSR_ERR_NUMERIC;
  }
  return BSR_OK;
}

}  // extern "C"
