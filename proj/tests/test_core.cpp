#include <doctest.h>

#include "bsr/config.hpp"
#include "bsr/rng.hpp"
#include "bsr/types.hpp"

using namespace bsr;

TEST_CASE("one_hot basics") {
  const Vec v = one_hot(2, 4);
  CHECK(v[0] == 0.0);
  CHECK(v[2] == 1.0);
  CHECK(v.sum() == 1.0);

  CHECK(one_hot(0, 1)[0] == 1.0);

  const Vec last = one_hot(63, 64);
  CHECK(last[63] == 1.0);
  CHECK(last.sum() == 1.0);

  CHECK_THROWS_AS(one_hot(4, 4), ConfigError);
  CHECK_THROWS_AS(one_hot(-1, 4), ConfigError);
}

TEST_CASE("rng streams are deterministic and role-separated") {
  Rng a(42, StreamRole::Action), b(42, StreamRole::Action);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  Rng c(42, StreamRole::EnvNoise);
  bool all_equal = true;
  Rng a2(42, StreamRole::Action);
  for (int i = 0; i < 10; ++i) all_equal &= a2.next() == c.next();
  CHECK_FALSE(all_equal);

  Rng u(7, StreamRole::Init);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform01();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  for (int i = 0; i < 1000; ++i) {
    const int n = u.below(5);
    CHECK(n >= 0);
    CHECK(n < 5);
  }
}

TEST_CASE("rng normal moments") {
  Rng r(3, StreamRole::Init);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("rng categorical matches weights") {
  Rng r(11, StreamRole::Init);
  std::vector<double> w = {0.2, 0.5, 0.3};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[r.categorical(w)];
  for (int i = 0; i < 3; ++i) {
    const double p = w[i];
    const double sigma = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(counts[i] / static_cast<double>(n) - p) < 4 * sigma);
  }
}

TEST_CASE("profile defaults carry the published settings") {
  const RunConfig exp1 = profile_defaults(Profile::Exp1, AgentKind::Bsr);
  CHECK(exp1.episodes == 4500);
  CHECK(exp1.episodes_per_task == 20);
  CHECK(exp1.epsilon == 0.0);
  CHECK(exp1.alpha_sr == 0.005);
  CHECK(exp1.sigma_cr == 1.6);
  CHECK(exp1.alpha_dp == 2.0);
  CHECK(exp1.filter_delay == 3);
  CHECK(exp1.n_particles == 100);
  CHECK(exp1.particle_window == 10);
  CHECK(exp1.alpha_w == 1.0);
  CHECK(exp1.alpha_ws == 0.01);
  CHECK(exp1.c_ws == 1.0);
  CHECK(exp1.buffer_capacity == 300);
  CHECK(exp1.replay_minibatch == 5);
  CHECK(exp1.update_policy == UpdatePolicy::AllMaps);

  const RunConfig ssr = profile_defaults(Profile::Exp1, AgentKind::Ssr);
  CHECK(ssr.k == 1);
  CHECK(ssr.epsilon == 0.1);
  CHECK(ssr.alpha_sr == 0.001);

  const RunConfig exp3 = profile_defaults(Profile::Exp3, AgentKind::Bsr);
  CHECK(exp3.total_step_budget == 250000);
  CHECK(exp3.filter_delay == 4);
  CHECK(exp3.particle_window == 50);
  CHECK(exp3.replay_minibatch == 15);
  CHECK(exp3.sync_interval == 80);
  CHECK(exp3.alpha_w == 0.005);
  CHECK(exp3.alpha_sr == 0.0005);
  CHECK(exp3.update_policy == UpdatePolicy::MostLikely);
  CHECK(exp3.offset_mode == OffsetMode::ConstantPlusCr);

  const RunConfig forage = profile_defaults(Profile::Forage, AgentKind::Bsr);
  CHECK(forage.epsilon == 0.2);
  CHECK(forage.alpha_w == 0.5);
  CHECK(forage.alpha_sr == 0.1);
  CHECK(forage.sigma_cr == 1.0);
}

TEST_CASE("config json round trip and unknown keys") {
  RunConfig cfg = config_from_json(R"({"profile":"exp2","agent":"ssr_plus","seed":9,"epsilon":0.3})");
  CHECK(cfg.profile == Profile::Exp2);
  CHECK(cfg.agent == AgentKind::SsrPlus);
  CHECK(cfg.k == 1);
  CHECK(cfg.seed == 9);
  CHECK(cfg.epsilon == 0.3);
  CHECK(cfg.offset_mode == OffsetMode::Constant);

  const std::string dump = config_to_json(cfg);
  RunConfig again = config_from_json(dump);
  CHECK(again.epsilon == cfg.epsilon);
  CHECK(again.agent == cfg.agent);
  CHECK(config_to_json(again) == dump);

  CHECK_THROWS_AS(config_from_json(R"({"profile":"exp1","agnet":"bsr"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"profile":"exp9"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
}

TEST_CASE("config validation rejects bad combinations") {
  RunConfig cfg = profile_defaults(Profile::Exp1, AgentKind::Bsr);
  cfg.gamma = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = profile_defaults(Profile::Exp1, AgentKind::Gsr);
  cfg.offset_mode = OffsetMode::ConstantPlusCr;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = profile_defaults(Profile::Exp3, AgentKind::Gsr);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = profile_defaults(Profile::Forage, AgentKind::Kq);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = profile_defaults(Profile::Exp1, AgentKind::Ssr);
  cfg.k = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = profile_defaults(Profile::Exp1, AgentKind::Bsr);
  cfg.filter_delay = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  CHECK_NOTHROW(profile_defaults(Profile::Exp1, AgentKind::Bsr).validate());
  CHECK_NOTHROW(profile_defaults(Profile::Exp3, AgentKind::Gpi).validate());
}
