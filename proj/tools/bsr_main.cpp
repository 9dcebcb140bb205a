// Command-line front end; talks to the engine through the C API only.
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bsr/bsr_c.h"

namespace {

int fail(int status) {
  std::fprintf(stderr, "error (%s): %s\n", bsr_status_name(status), bsr_last_error());
  return status == BSR_OK ? 1 : status;
}

std::string join_json_numbers(const std::vector<double>& xs) {
  std::string out = "[";
  for (size_t i = 0; i < xs.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", xs[i]);
    out += (i ? "," : "");
    out += buf;
  }
  return out + "]";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Successor-map reinforcement-learning engine"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one experiment");
  std::string run_profile = "exp1", run_agent = "bsr", run_config, run_out;
  std::uint64_t run_seed = 1;
  std::vector<std::string> run_sets;
  bool run_quiet = false;
  run->add_option("--profile", run_profile, "exp1|exp2|exp3|forage|ymaze");
  run->add_option("--agent", run_agent, "bsr|bsr2|gsr|ssr|ssr_plus|ew|kq|gpi");
  run->add_option("--seed", run_seed, "run seed");
  run->add_option("--config", run_config, "JSON config file (profile/agent keys allowed)");
  run->add_option("--out", run_out, "artifact output directory");
  run->add_option("--set", run_sets, "extra key=value overrides")->take_all();
  run->add_flag("--quiet", run_quiet, "suppress the totals line");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Grid sweep over agents x epsilon x alpha_sr");
  std::string sweep_profile = "exp1", sweep_out = "sweep_out", sweep_overrides;
  std::vector<std::string> sweep_agents;
  std::vector<double> sweep_eps, sweep_alphas;
  int sweep_seeds = 1, sweep_jobs = 1;
  std::uint64_t sweep_base_seed = 1;
  sweep->add_option("--profile", sweep_profile, "experiment profile");
  sweep->add_option("--agents", sweep_agents, "agents to sweep")->required()->take_all();
  sweep->add_option("--eps", sweep_eps, "epsilon grid")->take_all();
  sweep->add_option("--alphas", sweep_alphas, "alpha_sr grid")->take_all();
  sweep->add_option("--seeds", sweep_seeds, "replicates per cell");
  sweep->add_option("--base-seed", sweep_base_seed, "base seed for cell derivation");
  sweep->add_option("--jobs", sweep_jobs, "parallel workers");
  sweep->add_option("--overrides", sweep_overrides, "JSON overrides file applied per cell");
  sweep->add_option("--out", sweep_out, "output directory");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Analyses over an artifact directory");
  std::string an_kind, an_in, an_out;
  analyze->add_option("kind", an_kind, "flicker|splitter|summary")->required();
  analyze->add_option("--in", an_in, "artifact directory")->required();
  analyze->add_option("--out", an_out, "output report path")->required();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Run the independent numerical oracles");
  (void)oracle;

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    bsr_config* cfg = run_config.empty()
                          ? bsr_config_create(run_profile.c_str(), run_agent.c_str())
                          : bsr_config_load(run_config.c_str());
    if (!cfg) return fail(BSR_ERR_CONFIG);
    int rc = bsr_config_set(cfg, "seed", std::to_string(run_seed).c_str());
    for (const auto& kv : run_sets) {
      if (rc != BSR_OK) break;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
        bsr_config_free(cfg);
        return 1;
      }
      rc = bsr_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    }
    if (rc != BSR_OK) {
      bsr_config_free(cfg);
      return fail(rc);
    }
    bsr_result* result = nullptr;
    rc = bsr_run(cfg, run_out.empty() ? nullptr : run_out.c_str(), &result);
    bsr_config_free(cfg);
    if (rc != BSR_OK) return fail(rc);
    if (!run_quiet)
      std::printf("episodes=%lld total_steps=%.0f total_return=%.4f\n",
                  static_cast<long long>(bsr_result_episodes(result)),
                  bsr_result_total_steps(result), bsr_result_total_return(result));
    bsr_result_free(result);
    return 0;
  }

  if (sweep->parsed()) {
    std::string spec = "{\"profile\":\"" + sweep_profile + "\",\"agents\":[";
    for (size_t i = 0; i < sweep_agents.size(); ++i)
      spec += (i ? ",\"" : "\"") + sweep_agents[i] + "\"";
    spec += "]";
    if (!sweep_eps.empty()) spec += ",\"epsilons\":" + join_json_numbers(sweep_eps);
    if (!sweep_alphas.empty()) spec += ",\"alphas\":" + join_json_numbers(sweep_alphas);
    spec += ",\"seeds\":" + std::to_string(sweep_seeds);
    spec += ",\"base_seed\":" + std::to_string(sweep_base_seed);
    if (!sweep_overrides.empty()) {
      FILE* f = std::fopen(sweep_overrides.c_str(), "rb");
      if (!f) {
        std::fprintf(stderr, "error: cannot open %s\n", sweep_overrides.c_str());
        return 1;
      }
      std::string text;
      char buf[4096];
      size_t n;
      while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
      std::fclose(f);
      spec += ",\"overrides\":" + text;
    }
    spec += "}";
    const int rc = bsr_sweep(spec.c_str(), sweep_out.c_str(), sweep_jobs);
    if (rc != BSR_OK) return fail(rc);
    std::printf("sweep summary written to %s/sweep_summary.txt\n", sweep_out.c_str());
    return 0;
  }

  if (analyze->parsed()) {
    const int rc = bsr_analyze(an_kind.c_str(), an_in.c_str(), an_out.c_str());
    if (rc != BSR_OK) return fail(rc);
    std::printf("report written to %s\n", an_out.c_str());
    return 0;
  }

  if (oracle->parsed()) {
    char* report = nullptr;
    const int rc = bsr_oracle_check(&report);
    if (report) {
      std::fputs(report, stdout);
      bsr_string_free(report);
    }
    if (rc != BSR_OK) {
      std::fprintf(stderr, "oracle self-check failed\n");
      return 1;
    }
    return 0;
  }
  return 0;
}
