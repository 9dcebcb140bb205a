#include "bsr/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bsr/crfilter.hpp"
#include "bsr/envs.hpp"
#include "bsr/neural.hpp"

namespace bsr::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double omega_entropy(const Vec& omega) {
  double h = 0.0;
  for (int i = 0; i < omega.size(); ++i)
    if (omega[i] > 0.0) h -= omega[i] * std::log(omega[i]);
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

envs::GridLayout grid_layout_for(const RunConfig& cfg) {
  switch (cfg.env) {
    case EnvKind::Forage:
      return envs::GridLayout::open_maze();
    case EnvKind::YMaze:
      return envs::GridLayout::ymaze();
    default:
      return cfg.layout_file.empty() ? envs::GridLayout::default_maze()
                                     : envs::GridLayout::load_file(cfg.layout_file);
  }
}

void record_episode(RunArtifacts& art, long episode, int steps, double ret,
                    const agents::TabularAgent& agent) {
  EpisodeRecord rec;
  rec.episode = episode;
  rec.steps = steps;
  rec.ret = ret;
  rec.context = agent.most_likely_context();
  rec.omega_entropy = omega_entropy(agent.omega());
  art.episodes.push_back(rec);
  art.total_steps += steps;
  art.total_return += ret;
}

// Experiments I and II: changing (start, goal) tasks, optional puddles.
RunArtifacts run_grid(const RunConfig& cfg) {
  RngStreams streams(cfg.seed);
  envs::GridMazeEnv env(grid_layout_for(cfg), cfg.env == EnvKind::PuddleWorld,
                        cfg.episodes_per_task);
  agents::TabularAgent agent(cfg, env.state_count(), &streams);
  const bool signalled_rewards = cfg.profile == Profile::Exp1;

  RunArtifacts art;
  art.config = cfg;
  for (long ep = 0; ep < cfg.episodes; ++ep) {
    const auto change = env.begin_episode(static_cast<int>(ep), streams.schedule);
    if (change.changed) {
      if (signalled_rewards)
        agent.on_task_change(change, /*with_rewards=*/true);
      else if (cfg.agent == AgentKind::Gpi)
        agent.on_task_change(change, /*with_rewards=*/false);
    }
    int s = env.start_state();
    agent.begin_episode(static_cast<int>(ep), s);
    int steps = 0;
    double ret = 0.0;
    while (steps < cfg.step_limit) {
      const auto choice = agent.select_action(s);
      const auto out = env.step(s, choice.action);
      ++steps;
      ret += out.reward;
      agent.observe({s, choice.action, out.s_next, out.reward, choice.context},
                    out.terminal);
      s = out.s_next;
      if (out.terminal) break;
    }
    agent.end_episode();
    record_episode(art, ep, steps, ret, agent);
  }
  if (agent.filter()) art.degenerate_filter_steps = agent.filter()->degenerate_steps();
  if (cfg.trace_filter) art.filter_trace = agent.filter_trace();
  return art;
}

// Foraging with pre/post probes and the flickering analysis.
RunArtifacts run_forage(const RunConfig& cfg) {
  RngStreams streams(cfg.seed);
  envs::ForageEnv env(grid_layout_for(cfg), cfg.episodes_per_task);
  agents::TabularAgent agent(cfg, env.state_count(), &streams);
  agent.set_value_mask(&env.collected());

  RunArtifacts art;
  art.config = cfg;
  auto& fa = art.forage.emplace();

  const int tps = cfg.episodes_per_task;
  const int sessions = cfg.episodes / tps;
  const auto& layout = env.layout();
  const auto& free = layout.free_cells();
  int pos = free[streams.schedule.below(static_cast<int>(free.size()))];

  auto probe_walk = [&](int n_steps) {
    for (int i = 0; i < n_steps; ++i) {
      const int a = streams.env.below(kNumActions);
      pos = envs::grid_step(layout, pos, a, /*goal=*/-1).s_next;
    }
  };
  auto make_template = [&]() {
    std::vector<const sr::SuccessorMap*> maps;
    for (int i = 0; i < agent.k(); ++i) maps.push_back(&agent.map(i));
    return analysis::probe_template(maps, agent.template_weights());
  };

  std::vector<double> trial_sum(tps, 0.0);
  std::vector<int> trial_count(tps, 0);

  for (int session = 0; session < sessions; ++session) {
    const long first_trial = static_cast<long>(session) * tps;
    const auto change = env.begin_trial(static_cast<int>(first_trial), streams.schedule);
    if (change.changed && cfg.agent == AgentKind::Gpi)
      agent.on_task_change(change, false);

    const auto pre = make_template();
    probe_walk(cfg.probe_steps);

    std::vector<analysis::FiringStep> session_steps;
    for (int trial = 0; trial < tps; ++trial) {
      const long ep = first_trial + trial;
      if (trial > 0) env.begin_trial(static_cast<int>(ep), streams.schedule);
      agent.begin_episode(static_cast<int>(ep), pos);
      int steps = 0;
      double ret = 0.0;
      while (steps < cfg.step_limit) {
        const auto choice = agent.select_action(pos);
        session_steps.push_back(
            {trial, pos, choice.action,
             analysis::firing_rates(agent.map(choice.context), pos, choice.action)});
        const auto out = env.step(pos, choice.action);
        ++steps;
        ret += out.reward;
        const bool suppress = out.reward == 0.0 && env.collected()[out.s_next] != 0;
        agent.observe({pos, choice.action, out.s_next, out.reward, choice.context},
                      out.terminal, suppress);
        pos = out.s_next;
        if (out.terminal) break;
      }
      agent.end_episode();
      record_episode(art, ep, steps, ret, agent);
    }

    const auto post = make_template();
    probe_walk(cfg.probe_steps);

    const auto trace = analysis::flicker_trace(session_steps, pre, post, tps);
    fa.skipped_steps += trace.skipped_steps;
    const int session_num = session + 1;
    for (size_t i = 0; i < trace.z_diff.size(); ++i)
      fa.flicker.push_back({session_num, trace.step_trial[i] + 1, static_cast<int>(i),
                            trace.z_diff[i]});
    if (session_num >= 25 && session_num <= 140) {
      const auto rho = analysis::session_trial_spearman(trace, 16);
      if (rho) fa.session_rho.push_back(*rho);
      for (int t = 0; t < 16 && t < tps; ++t) {
        if (!std::isnan(trace.trial_mean[t])) {
          trial_sum[t] += trace.trial_mean[t];
          ++trial_count[t];
        }
      }
    }
  }

  fa.rho = analysis::mean_sem(fa.session_rho);
  fa.trial_mean_zdiff.resize(16, std::numeric_limits<double>::quiet_NaN());
  for (int t = 0; t < 16; ++t)
    if (trial_count[t] > 0) fa.trial_mean_zdiff[t] = trial_sum[t] / trial_count[t];

  if (agent.filter()) art.degenerate_filter_steps = agent.filter()->degenerate_steps();
  if (cfg.trace_filter) art.filter_trace = agent.filter_trace();
  return art;
}

// Y-maze with trial-type blocks and splitter decoding.
RunArtifacts run_ymaze(const RunConfig& cfg) {
  RngStreams streams(cfg.seed);
  envs::YMazeEnv env(cfg.ymaze_pretrain_episodes, cfg.episodes_per_task,
                     cfg.ymaze_blocks, cfg.ymaze_segment_episodes);
  agents::TabularAgent agent(cfg, env.state_count(), &streams);

  RunArtifacts art;
  art.config = cfg;
  auto& ym = art.ymaze.emplace();

  const int total = env.total_episodes();
  for (int ep = 0; ep < total; ++ep) {
    const auto change = env.begin_episode(ep, streams.schedule);
    if (change.changed && (cfg.agent == AgentKind::Gpi || cfg.agent == AgentKind::Kq))
      agent.on_task_change(change, false);
    int s = env.start_state();
    agent.begin_episode(ep, s);
    const bool main_phase = !env.in_pretrain(ep);

    int steps = 0;
    double ret = 0.0;
    bool success = false;
    Vec start_vec;
    while (steps < cfg.step_limit) {
      const auto choice = agent.select_action(s);
      if (steps == 0 && main_phase)
        start_vec = analysis::firing_rates(agent.map(choice.context), s, choice.action);
      const auto out = env.step(s, choice.action);
      ++steps;
      ret += out.reward;
      agent.observe({s, choice.action, out.s_next, out.reward, choice.context},
                    out.terminal);
      s = out.s_next;
      if (out.terminal) {
        success = true;
        break;
      }
    }
    agent.end_episode();
    record_episode(art, ep, steps, ret, agent);
    if (main_phase)
      ym.trials.push_back({ep, env.trial_type(), steps, success, std::move(start_vec)});
  }

  std::vector<std::pair<int, Vec>> decode_input;
  double blocked_steps = 0.0, open_steps = 0.0;
  int blocked_n = 0, open_n = 0;
  for (const auto& t : ym.trials) {
    if (t.success) decode_input.emplace_back(t.type, t.start_vec);
    if (t.type == 1 || t.type == 2) {
      blocked_steps += t.steps;
      ++blocked_n;
    } else {
      open_steps += t.steps;
      ++open_n;
    }
  }
  ym.decode = analysis::splitter_decode(decode_input, 4, &ym.decode_excluded);
  ym.blocked_mean_steps = blocked_n ? blocked_steps / blocked_n : 0.0;
  ym.open_mean_steps = open_n ? open_steps / open_n : 0.0;

  if (agent.filter()) art.degenerate_filter_steps = agent.filter()->degenerate_steps();
  if (cfg.trace_filter) art.filter_trace = agent.filter_trace();
  return art;
}

// Continuous maze with the MLP agent, bounded by a total step budget.
RunArtifacts run_continuous(const RunConfig& cfg) {
  RngStreams streams(cfg.seed);
  envs::ContinuousMaze maze(grid_layout_for(cfg), cfg.episodes_per_task);
  neural::NeuralAgent agent(cfg, envs::ContinuousMaze::kEmbeddingDim, &streams);
  envs::FeatureTrace trace(envs::ContinuousMaze::kEmbeddingDim);

  RunArtifacts art;
  art.config = cfg;
  long long total_steps = 0;
  long ep = 0;
  while (total_steps < cfg.total_step_budget && ep < cfg.episodes) {
    const auto change = maze.begin_episode(static_cast<int>(ep), streams.schedule);
    if (change.changed && cfg.agent == AgentKind::Gpi)
      agent.on_task_change(change, false);
    envs::Vec2 pos = maze.start();
    trace.reset();
    Vec phi = trace.observe(maze.rbf(pos));
    agent.begin_episode(ep, phi);

    int steps = 0;
    double ret = 0.0;
    while (steps < cfg.step_limit && total_steps < cfg.total_step_budget) {
      const auto choice = agent.select_action(phi);
      const auto out = maze.step(pos, choice.action, streams.env);
      const Vec phi_next = trace.observe(maze.rbf(out.pos));
      agent.observe(phi, choice.action, phi_next, out.reward, choice.context,
                    out.terminal);
      pos = out.pos;
      phi = phi_next;
      ++steps;
      ++total_steps;
      ret += out.reward;
      if (total_steps % 1000 == 0)
        art.reward_curve.emplace_back(total_steps, art.total_return + ret);
      if (out.terminal) break;
    }
    agent.end_episode();

    EpisodeRecord rec;
    rec.episode = ep;
    rec.steps = steps;
    rec.ret = ret;
    rec.context = agent.most_likely_context();
    rec.omega_entropy = omega_entropy(agent.omega());
    art.episodes.push_back(rec);
    art.total_steps += steps;
    art.total_return += ret;
    ++ep;
  }
  return art;
}

}  // namespace

RunArtifacts run_experiment(const RunConfig& cfg) {
  cfg.validate();
  switch (cfg.env) {
    case EnvKind::GridMaze:
    case EnvKind::PuddleWorld:
      return run_grid(cfg);
    case EnvKind::Forage:
      return run_forage(cfg);
    case EnvKind::YMaze:
      return run_ymaze(cfg);
    case EnvKind::ContinuousMaze:
      return run_continuous(cfg);
  }
  throw ConfigError("run_experiment: unknown environment");
}

void write_artifacts(const RunArtifacts& art, const std::string& dir) {
  fs::create_directories(dir);

  {
    json j;
    j["config"] = json::parse(config_to_json(art.config));
    json totals;
    totals["episodes"] = art.episodes.size();
    totals["total_steps"] = art.total_steps;
    totals["total_return"] = art.total_return;
    totals["degenerate_filter_steps"] = art.degenerate_filter_steps;
    if (art.forage) {
      totals["forage_rho_mean"] = art.forage->rho.mean;
      totals["forage_rho_sem"] = art.forage->rho.sem;
      totals["forage_sessions_analysed"] = art.forage->session_rho.size();
      totals["forage_skipped_steps"] = art.forage->skipped_steps;
    }
    if (art.ymaze) {
      totals["ymaze_blocked_mean_steps"] = art.ymaze->blocked_mean_steps;
      totals["ymaze_open_mean_steps"] = art.ymaze->open_mean_steps;
      totals["ymaze_decode_excluded"] = art.ymaze->decode_excluded;
    }
    j["totals"] = totals;
    std::ofstream out(fs::path(dir) / "run.json");
    out << j.dump(2) << "\n";
  }

  {
    std::ofstream out(fs::path(dir) / "episodes.csv");
    out << "episode,steps,return,context,omega_entropy\n";
    for (const auto& e : art.episodes)
      out << e.episode << ',' << e.steps << ',' << fmt(e.ret) << ',' << e.context << ','
          << fmt(e.omega_entropy) << "\n";
  }

  if (art.forage) {
    std::ofstream out(fs::path(dir) / "flicker.csv");
    out << "session,trial,step,z_diff\n";
    for (const auto& r : art.forage->flicker)
      out << r.session << ',' << r.trial << ',' << r.step << ',' << fmt(r.z_diff) << "\n";
    std::ofstream tz(fs::path(dir) / "trial_zdiff.csv");
    tz << "trial,mean_z_diff\n";
    for (size_t t = 0; t < art.forage->trial_mean_zdiff.size(); ++t)
      tz << (t + 1) << ',' << fmt(art.forage->trial_mean_zdiff[t]) << "\n";
  }

  if (art.ymaze) {
    std::ofstream out(fs::path(dir) / "ymaze_trials.csv");
    out << "episode,type,steps,success";
    const long dim = art.ymaze->trials.empty() ? 0 : art.ymaze->trials.front().start_vec.size();
    for (long i = 0; i < dim; ++i) out << ",v" << i;
    out << "\n";
    for (const auto& t : art.ymaze->trials) {
      out << t.episode << ',' << t.type << ',' << t.steps << ',' << (t.success ? 1 : 0);
      for (long i = 0; i < t.start_vec.size(); ++i) out << ',' << fmt(t.start_vec[i]);
      out << "\n";
    }
    std::ofstream dm(fs::path(dir) / "splitter.csv");
    for (int r = 0; r < art.ymaze->decode.rows(); ++r) {
      for (int c = 0; c < art.ymaze->decode.cols(); ++c)
        dm << (c ? "," : "") << fmt(art.ymaze->decode(r, c));
      dm << "\n";
    }
  }

  if (!art.reward_curve.empty()) {
    std::ofstream out(fs::path(dir) / "reward_curve.csv");
    out << "step,total_reward\n";
    for (const auto& [step, reward] : art.reward_curve)
      out << step << ',' << fmt(reward) << "\n";
  }

  if (!art.filter_trace.empty()) {
    std::ofstream out(fs::path(dir) / "filter_trace.csv");
    out << "t,v_cr";
    for (int i = 0; i < art.filter_trace.front().omega.size(); ++i) out << ",omega" << i;
    out << ",winner\n";
    for (const auto& row : art.filter_trace) {
      out << row.t << ',' << fmt(row.v_cr);
      for (int i = 0; i < row.omega.size(); ++i) out << ',' << fmt(row.omega[i]);
      out << ',' << row.winner << "\n";
    }
  }
}

std::uint64_t derive_seed(std::uint64_t base_seed, const std::string& cell_tag,
                          int replicate) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ base_seed;
  auto mix = [&](char c) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  };
  for (char c : cell_tag) mix(c);
  mix('#');
  const std::string rep = std::to_string(replicate);
  for (char c : rep) mix(c);
  return h == 0 ? 1 : h;
}

void parallel_run(std::vector<std::function<void()>> tasks, int jobs) {
  if (jobs <= 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      tasks[i]();
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
  pool.reserve(n);
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

SweepSummary sweep(const SweepSpec& spec, int jobs) {
  SweepSummary summary;
  summary.profile = spec.profile;

  const double kDefault = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> eps = spec.epsilons.empty() ? std::vector<double>{kDefault}
                                                  : spec.epsilons;
  std::vector<double> alphas = spec.alphas.empty() ? std::vector<double>{kDefault}
                                                   : spec.alphas;

  struct Cell {
    AgentKind agent;
    double eps, alpha;
  };
  std::vector<Cell> cells;
  for (AgentKind a : spec.agents)
    for (double e : eps)
      for (double al : alphas) cells.push_back({a, e, al});

  summary.cells.resize(cells.size());
  std::mutex mu;
  std::vector<std::function<void()>> tasks;
  for (size_t ci = 0; ci < cells.size(); ++ci) {
    auto& cell_out = summary.cells[ci];
    const Cell cell = cells[ci];
    RunConfig base = profile_defaults(spec.profile, cell.agent);
    if (!spec.overrides_json.empty()) apply_json_overrides(base, spec.overrides_json);
    if (!std::isnan(cell.eps)) base.epsilon = cell.eps;
    if (!std::isnan(cell.alpha)) base.alpha_sr = cell.alpha;
    cell_out.agent = cell.agent;
    cell_out.epsilon = base.epsilon;
    cell_out.alpha_sr = base.alpha_sr;

    const std::string tag = to_string(cell.agent) + "|eps=" + fmt(base.epsilon) +
                            "|asr=" + fmt(base.alpha_sr);
    for (int rep = 0; rep < spec.seeds; ++rep) {
      RunConfig cfg = base;
      cfg.seed = derive_seed(spec.base_seed, tag, rep);
      tasks.push_back([cfg, &cell_out, &mu] {
        try {
          const RunArtifacts art = run_experiment(cfg);
          std::lock_guard<std::mutex> lock(mu);
          cell_out.total_steps.push_back(static_cast<double>(art.total_steps));
          cell_out.total_return.push_back(art.total_return);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(mu);
          cell_out.failures.push_back(e.what());
        }
      });
    }
  }
  parallel_run(std::move(tasks), jobs);

  for (auto& cell : summary.cells) {
    std::sort(cell.total_steps.begin(), cell.total_steps.end());
    std::sort(cell.total_return.begin(), cell.total_return.end());
    cell.steps = analysis::mean_sem(cell.total_steps);
    cell.ret = analysis::mean_sem(cell.total_return);
  }
  return summary;
}

std::string SweepSummary::to_text() const {
  std::ostringstream out;
  const bool by_steps = profile == Profile::Exp1;
  out << "sweep profile=" << to_string(profile) << "\n";
  out << "agent,epsilon,alpha_sr,n,mean_steps,sem_steps,mean_return,sem_return,failures\n";
  for (const auto& c : cells) {
    out << to_string(c.agent) << ',' << fmt(c.epsilon) << ',' << fmt(c.alpha_sr) << ','
        << c.steps.n << ',' << fmt(c.steps.mean) << ',' << fmt(c.steps.sem) << ','
        << fmt(c.ret.mean) << ',' << fmt(c.ret.sem) << ',' << c.failures.size() << "\n";
  }
  std::map<std::string, const CellSummary*> best;
  for (const auto& c : cells) {
    if (c.steps.n == 0) continue;
    auto& slot = best[to_string(c.agent)];
    if (!slot) {
      slot = &c;
      continue;
    }
    const bool better = by_steps ? c.steps.mean < slot->steps.mean
                                 : c.ret.mean > slot->ret.mean;
    if (better) slot = &c;
  }
  for (const auto& [agent, c] : best) {
    out << "best " << agent << ": eps=" << fmt(c->epsilon)
        << " alpha_sr=" << fmt(c->alpha_sr)
        << (by_steps ? " mean_steps=" + fmt(c->steps.mean)
                     : " mean_return=" + fmt(c->ret.mean))
        << "\n";
  }
  return out.str();
}

std::string summarize(const std::vector<const RunArtifacts*>& runs) {
  std::ostringstream out;
  out << "runs: " << runs.size() << "\n";
  std::map<std::string, std::vector<const RunArtifacts*>> by_agent;
  for (const auto* r : runs) {
    out << "run agent=" << to_string(r->config.agent)
        << " profile=" << to_string(r->config.profile) << " seed=" << r->config.seed
        << " epsilon=" << fmt(r->config.epsilon)
        << " alpha_sr=" << fmt(r->config.alpha_sr) << " episodes=" << r->episodes.size()
        << " total_steps=" << r->total_steps << " total_return=" << fmt(r->total_return)
        << "\n";
    by_agent[to_string(r->config.agent)].push_back(r);
  }
  std::vector<std::vector<double>> step_groups, return_groups;
  for (const auto& [agent, group] : by_agent) {
    std::vector<double> steps, rets;
    for (const auto* r : group) {
      steps.push_back(static_cast<double>(r->total_steps));
      rets.push_back(r->total_return);
    }
    const auto ms = analysis::mean_sem(steps);
    const auto mr = analysis::mean_sem(rets);
    out << "agent " << agent << ": n=" << ms.n << " steps=" << fmt(ms.mean) << "+-"
        << fmt(ms.sem) << " return=" << fmt(mr.mean) << "+-" << fmt(mr.sem) << "\n";
    if (steps.size() >= 2) {
      step_groups.push_back(std::move(steps));
      return_groups.push_back(std::move(rets));
    }
  }
  if (step_groups.size() >= 2) {
    out << "anova_f_steps=" << fmt(analysis::one_way_anova_f(step_groups)) << "\n";
    out << "anova_f_return=" << fmt(analysis::one_way_anova_f(return_groups)) << "\n";
  }
  for (const auto* r : runs) {
    if (r->forage)
      out << "forage agent=" << to_string(r->config.agent)
          << " rho=" << fmt(r->forage->rho.mean) << "+-" << fmt(r->forage->rho.sem)
          << " sessions=" << r->forage->session_rho.size() << "\n";
    if (r->ymaze)
      out << "ymaze agent=" << to_string(r->config.agent)
          << " blocked_steps=" << fmt(r->ymaze->blocked_mean_steps)
          << " open_steps=" << fmt(r->ymaze->open_mean_steps) << "\n";
  }
  return out.str();
}

namespace {

std::vector<fs::path> find_files(const std::string& dir, const std::string& name) {
  std::vector<fs::path> out;
  if (!fs::exists(dir)) throw ConfigError("analyze: no such directory: " + dir);
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().filename() == name)
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void analyze_flicker(const std::string& in_dir, const std::string& out_path) {
  const auto files = find_files(in_dir, "flicker.csv");
  if (files.empty()) throw ConfigError("analyze flicker: no flicker.csv under " + in_dir);

  std::ostringstream out;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);  // header
    // session -> trial -> z-diffs
    std::map<int, std::map<int, std::vector<double>>> sessions;
    while (std::getline(in, line)) {
      const auto f = split_csv(line);
      if (f.size() != 4) continue;
      sessions[std::stoi(f[0])][std::stoi(f[1])].push_back(std::stod(f[3]));
    }
    std::vector<double> rhos;
    std::vector<double> trial_sum(16, 0.0);
    std::vector<int> trial_n(16, 0);
    for (const auto& [session, trials] : sessions) {
      if (session < 25 || session > 140) continue;
      std::vector<double> xs, ys;
      for (const auto& [trial, zs] : trials) {
        if (trial > 16) continue;
        const double mean =
            std::accumulate(zs.begin(), zs.end(), 0.0) / static_cast<double>(zs.size());
        xs.push_back(trial);
        ys.push_back(mean);
        trial_sum[trial - 1] += mean;
        ++trial_n[trial - 1];
      }
      if (xs.size() >= 2) {
        const auto rho = analysis::spearman(xs, ys);
        if (rho) rhos.push_back(*rho);
      }
    }
    const auto ms = analysis::mean_sem(rhos);
    out << "file=" << file.string() << " sessions=" << rhos.size()
        << " rho_mean=" << fmt(ms.mean) << " rho_sem=" << fmt(ms.sem) << "\n";
    for (int t = 0; t < 16; ++t)
      if (trial_n[t] > 0)
        out << "trial " << (t + 1) << " mean_z_diff=" << fmt(trial_sum[t] / trial_n[t])
            << "\n";
  }
  std::ofstream o(out_path);
  if (!o) throw ConfigError("analyze: cannot write " + out_path);
  o << out.str();
}

void analyze_splitter(const std::string& in_dir, const std::string& out_path) {
  const auto files = find_files(in_dir, "ymaze_trials.csv");
  if (files.empty())
    throw ConfigError("analyze splitter: no ymaze_trials.csv under " + in_dir);

  std::ostringstream out;
  for (const auto& file : files) {
    std::ifstream in(file);
    std::string line;
    std::getline(in, line);
    const auto header = split_csv(line);
    const int dim = static_cast<int>(header.size()) - 4;
    std::vector<std::pair<int, Vec>> trials;
    while (std::getline(in, line)) {
      const auto f = split_csv(line);
      if (static_cast<int>(f.size()) != dim + 4) continue;
      if (f[3] != "1") continue;  // successful trials only
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = std::stod(f[4 + i]);
      trials.emplace_back(std::stoi(f[1]), std::move(v));
    }
    int excluded = 0;
    const Mat decode = analysis::splitter_decode(trials, 4, &excluded);
    out << "file=" << file.string() << " trials=" << trials.size()
        << " excluded=" << excluded << "\n";
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) out << (c ? "," : "") << fmt(decode(r, c));
      out << "\n";
    }
  }
  std::ofstream o(out_path);
  if (!o) throw ConfigError("analyze: cannot write " + out_path);
  o << out.str();
}

void analyze_summary(const std::string& in_dir, const std::string& out_path) {
  const auto files = find_files(in_dir, "run.json");
  if (files.empty()) throw ConfigError("analyze summary: no run.json under " + in_dir);

  std::ostringstream out;
  std::map<std::string, std::vector<double>> steps_by_agent, return_by_agent;
  for (const auto& file : files) {
    std::ifstream in(file);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) continue;
    const std::string agent = j["config"]["agent"].get<std::string>();
    const double steps = j["totals"]["total_steps"].get<double>();
    const double ret = j["totals"]["total_return"].get<double>();
    steps_by_agent[agent].push_back(steps);
    return_by_agent[agent].push_back(ret);
    out << "run " << file.string() << " agent=" << agent << " seed="
        << j["config"]["seed"].dump() << " total_steps=" << fmt(steps)
        << " total_return=" << fmt(ret) << "\n";
  }
  std::vector<std::vector<double>> step_groups, return_groups;
  for (const auto& [agent, xs] : steps_by_agent) {
    const auto ms = analysis::mean_sem(xs);
    const auto mr = analysis::mean_sem(return_by_agent[agent]);
    out << "agent " << agent << ": n=" << ms.n << " steps=" << fmt(ms.mean) << "+-"
        << fmt(ms.sem) << " return=" << fmt(mr.mean) << "+-" << fmt(mr.sem) << "\n";
    if (xs.size() >= 2) {
      step_groups.push_back(xs);
      return_groups.push_back(return_by_agent[agent]);
    }
  }
  if (step_groups.size() >= 2) {
    out << "anova_f_steps=" << fmt(analysis::one_way_anova_f(step_groups)) << "\n";
    out << "anova_f_return=" << fmt(analysis::one_way_anova_f(return_groups)) << "\n";
  }
  std::ofstream o(out_path);
  if (!o) throw ConfigError("analyze: cannot write " + out_path);
  o << out.str();
}

int oracle_check(std::string* report) {
  std::ostringstream out;
  int failures = 0;
  auto check = [&](bool ok, const std::string& name) {
    out << (ok ? "[pass] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  {
    Mat p(2, 2);
    p << 0, 1, 1, 0;
    const Mat m = sr::analytic_sr(p, 0.5);
    check(std::abs(m(0, 0) - 2.0 / 3.0) < 1e-12 && std::abs(m(0, 1) - 4.0 / 3.0) < 1e-12,
          "analytic_sr: two-state flip chain");
    const Mat id = sr::analytic_sr(Mat::Identity(3, 3), 0.5);
    check(std::abs(id(1, 1) - 2.0) < 1e-12, "analytic_sr: self-loop geometric series");
    // brute-force series summation cross-check
    Mat series = Mat::Zero(2, 2);
    Mat pk = p;
    double g = 1.0;
    for (int k = 0; k < 200; ++k) {
      series += g * pk;
      pk = pk * p;
      g *= 0.5;
    }
    check((series - m).cwiseAbs().maxCoeff() < 1e-10, "analytic_sr: series summation");
  }
  {
    auto post = crfilter::GaussianPosterior::standard(3);
    post.update(one_hot(1, 3), 4.0, 1.0);
    check(std::abs(post.cov()(1, 1) - 0.5) < 1e-12 && std::abs(post.mean()[1] - 2.0) < 1e-12 &&
              std::abs(post.cov()(0, 0) - 1.0) < 1e-12,
          "conjugate posterior: one-hot closed form");

    // sequential gain-form vs batch precision-form with explicit inverse
    Rng rng(7, StreamRole::Init);
    const int d = 4;
    auto seq = crfilter::GaussianPosterior::standard(d);
    Mat precision = Mat::Identity(d, d);
    Vec info = Vec::Zero(d);
    const double sigma = 0.7;
    for (int i = 0; i < 25; ++i) {
      Vec phi(d);
      for (int j = 0; j < d; ++j) phi[j] = rng.normal();
      const double v = rng.normal();
      seq.update(phi, v, sigma);
      precision += phi * phi.transpose() / (sigma * sigma);
      info += phi * v / (sigma * sigma);
    }
    const Mat cov_batch = precision.inverse();
    const Vec mean_batch = cov_batch * info;
    check((seq.cov() - cov_batch).cwiseAbs().maxCoeff() < 1e-10 &&
              (seq.mean() - mean_batch).cwiseAbs().maxCoeff() < 1e-10,
          "conjugate posterior: sequential matches batch closed form");
  }
  if (report) *report = out.str();
  return failures;
}

}  // namespace bsr::harness
