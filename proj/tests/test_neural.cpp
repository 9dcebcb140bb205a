#include <doctest.h>

#include <cmath>

#include "bsr/envs.hpp"
#include "bsr/harness.hpp"
#include "bsr/neural.hpp"

using namespace bsr;
using namespace bsr::neural;

TEST_CASE("glorot initialization") {
  Rng rng(3, StreamRole::Init);
  const double bound = std::sqrt(6.0 / 250.0);
  CHECK(bound == doctest::Approx(0.1549).epsilon(1e-3));

  double max_abs = 0.0, sum = 0.0, sum2 = 0.0;
  long n = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Mat w = glorot_init(100, 150, rng);
    max_abs = std::max(max_abs, w.cwiseAbs().maxCoeff());
    sum += w.sum();
    sum2 += w.cwiseProduct(w).sum();
    n += w.size();
  }
  CHECK(max_abs <= bound);
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(var - 2.0 / 250.0) / (2.0 / 250.0) < 0.05);

  SuccessorNetwork net(10, 8, 1, 4, 10, rng);
  for (const auto& b : net.hidden_b()) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
  for (const auto& b : net.head_b()) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward pass basics") {
  Rng rng(5, StreamRole::Init);
  SuccessorNetwork net(6, 4, 1, 4, 6, rng);

  SUBCASE("zero input gives zero output (zero biases, tanh(0)=0)") {
    const Vec out = net.forward(Vec::Zero(6), 2);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("outputs stay finite for bounded inputs") {
    Vec phi(6);
    for (int i = 0; i < 6; ++i) phi[i] = 10.0 * (i % 2 ? 1 : -1);
    const Vec out = net.forward(phi, 0);
    CHECK(out.allFinite());
  }
  SUBCASE("q_all_heads equals per-head forward dotted with w") {
    Vec phi(6), w(6);
    for (int i = 0; i < 6; ++i) {
      phi[i] = rng.normal();
      w[i] = rng.normal();
    }
    const Vec q = net.q_all_heads(phi, w);
    for (int a = 0; a < 4; ++a)
      CHECK(q[a] == doctest::Approx(net.forward(phi, a).dot(w)).epsilon(1e-12));
  }
}

TEST_CASE("forward pass matches an independent loop implementation") {
  Rng rng(7, StreamRole::Init);
  const int in = 9, hidden = 7, out_dim = 9;
  SuccessorNetwork net(in, hidden, 1, 4, out_dim, rng);
  Vec phi(in);
  for (int i = 0; i < in; ++i) phi[i] = rng.normal();

  for (int head = 0; head < 4; ++head) {
    const Vec fast = net.forward(phi, head);
    // plain loops over the exposed parameters
    std::vector<double> h(hidden, 0.0);
    for (int j = 0; j < hidden; ++j) {
      double z = net.hidden_b()[0][j];
      for (int i = 0; i < in; ++i) z += net.hidden_w()[0](j, i) * phi[i];
      h[j] = std::tanh(z);
    }
    for (int o = 0; o < out_dim; ++o) {
      double y = net.head_b()[head][o];
      for (int j = 0; j < hidden; ++j) y += net.head_w()[head](o, j) * h[j];
      CHECK(std::abs(y - fast[o]) < 1e-12);
    }
  }
}

namespace {
double loss_at(const SuccessorNetwork& net, const Vec& phi, int head, const Vec& target,
               const Vec& keep) {
  const auto cache = net.forward_train(phi, head, keep);
  return 0.5 * (target - cache.out).squaredNorm();
}
}  // namespace

TEST_CASE("backward gradients match central finite differences") {
  Rng rng(11, StreamRole::Init);
  const int in = 5, hidden = 4, out_dim = 5;
  SuccessorNetwork net(in, hidden, 1, 4, out_dim, rng);
  Vec phi(in), target(out_dim);
  for (int i = 0; i < in; ++i) phi[i] = rng.normal();
  for (int i = 0; i < out_dim; ++i) target[i] = rng.normal();
  const int head = 2;

  auto check_grads = [&](const Vec& keep) {
    const auto cache = net.forward_train(phi, head, keep);
    const Vec delta = target - cache.out;
    const auto g = net.backward(cache, head, delta, keep);
    const double eps = 1e-6;
    double worst = 0.0;
    auto fd_check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + eps;
      const double up = loss_at(net, phi, head, target, keep);
      param = saved - eps;
      const double down = loss_at(net, phi, head, target, keep);
      param = saved;
      const double fd = (up - down) / (2 * eps);
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
      worst = std::max(worst, std::abs(fd - analytic) / denom);
    };
    for (int r = 0; r < hidden; ++r)
      for (int c = 0; c < in; ++c) fd_check(net.hidden_w()[0](r, c), g.hidden_w[0](r, c));
    for (int r = 0; r < hidden; ++r) fd_check(net.hidden_b()[0][r], g.hidden_b[0][r]);
    for (int r = 0; r < out_dim; ++r)
      for (int c = 0; c < hidden; ++c) fd_check(net.head_w()[head](r, c), g.head_w(r, c));
    for (int r = 0; r < out_dim; ++r) fd_check(net.head_b()[head][r], g.head_b[r]);
    CHECK(worst < 1e-4);
  };

  SUBCASE("dropout off") { check_grads(Vec::Ones(hidden)); }
  SUBCASE("fixed dropout mask") {
    Vec keep = Vec::Zero(hidden);
    keep[0] = keep[2] = 1.0 / 0.9;  // two units kept, inverted scaling
    check_grads(keep);
  }
}

TEST_CASE("rmsprop descends and scaling the loss keeps update signs") {
  Rng rng(13, StreamRole::Init);
  const int in = 6, hidden = 5, out_dim = 6;
  SuccessorNetwork net(in, hidden, 1, 4, out_dim, rng);
  SuccessorNetwork net2 = net;
  RmsProp opt(net, 0.9, 1e-8), opt2(net2, 0.9, 1e-8);
  Vec phi(in), target(out_dim);
  for (int i = 0; i < in; ++i) phi[i] = rng.normal();
  for (int i = 0; i < out_dim; ++i) target[i] = rng.normal(0.0, 2.0);
  const Vec keep = Vec::Ones(hidden);

  // gamma = 0 bootstrap-free: repeated steps regress head 1 onto the target
  double first = loss_at(net, phi, 1, target, keep);
  for (int i = 0; i < 400; ++i) {
    const auto cache = net.forward_train(phi, 1, keep);
    const Vec delta = target - cache.out;
    const auto g = net.backward(cache, 1, delta, keep);
    opt.step(net, g, 1e-3);
  }
  const double last = loss_at(net, phi, 1, target, keep);
  CHECK(last < 0.05 * first);

  // sign pattern of the first update is invariant to scaling the loss
  const auto cache = net2.forward_train(phi, 1, keep);
  const Vec delta = target - cache.out;
  const auto g1 = net2.backward(cache, 1, delta, keep);
  auto g5 = g1;
  g5.head_w *= 5.0;
  g5.head_b *= 5.0;
  for (auto& m : g5.hidden_w) m *= 5.0;
  for (auto& v : g5.hidden_b) v *= 5.0;
  SuccessorNetwork a = net2, b = net2;
  RmsProp oa(a, 0.9, 1e-8), ob(b, 0.9, 1e-8);
  oa.step(a, g1, 1e-3);
  ob.step(b, g5, 1e-3);
  const Mat da = a.head_w()[1] - net2.head_w()[1];
  const Mat db = b.head_w()[1] - net2.head_w()[1];
  for (int r = 0; r < da.rows(); ++r)
    for (int c = 0; c < da.cols(); ++c) {
      if (std::abs(g1.head_w(r, c)) < 1e-12) continue;
      CHECK(da(r, c) * db(r, c) > 0.0);
    }
}

TEST_CASE("dropout mask statistics and eval-pass equivalence") {
  Rng rng(17, StreamRole::Dropout);
  int zeros = 0;
  const int n = 100000;
  double sum = 0.0;
  for (int i = 0; i < n / 100; ++i) {
    const Vec keep = dropout_mask(100, 0.1, rng);
    for (int j = 0; j < 100; ++j) {
      if (keep[j] == 0.0) ++zeros;
      else CHECK(keep[j] == doctest::Approx(1.0 / 0.9));
      sum += keep[j];
    }
  }
  const double p0 = zeros / static_cast<double>(n);
  CHECK(std::abs(p0 - 0.1) < 0.01);
  CHECK(std::abs(sum / n - 1.0) < 0.01);  // inverted scaling keeps the mean

  // with all units kept, the training pass equals the eval pass
  Rng init(19, StreamRole::Init);
  SuccessorNetwork net(5, 4, 1, 4, 5, init);
  Vec phi(5);
  for (int i = 0; i < 5; ++i) phi[i] = init.normal();
  const auto cache = net.forward_train(phi, 3, Vec::Ones(4));
  CHECK((cache.out - net.forward(phi, 3)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("neural agent syncs targets on the 80-step schedule per episode") {
  RunConfig cfg = profile_defaults(Profile::Exp3, AgentKind::Ssr);
  cfg.seed = 3;
  RngStreams streams(cfg.seed);
  envs::ContinuousMaze maze(envs::GridLayout::default_maze(), cfg.episodes_per_task);
  NeuralAgent agent(cfg, 100, &streams);
  Rng schedule(3, StreamRole::Schedule);
  maze.begin_episode(0, schedule);
  envs::FeatureTrace trace(100);

  auto run_episode = [&](int n_steps) {
    envs::Vec2 pos = maze.start();
    trace.reset();
    Vec phi = trace.observe(maze.rbf(pos));
    agent.begin_episode(0, phi);
    for (int i = 0; i < n_steps; ++i) {
      const auto choice = agent.select_action(phi);
      const auto out = maze.step(pos, choice.action, streams.env);
      const Vec phi2 = trace.observe(maze.rbf(out.pos));
      agent.observe(phi, choice.action, phi2, out.reward, choice.context, out.terminal);
      pos = out.pos;
      phi = phi2;
    }
    agent.end_episode();
  };

  const long before = agent.sync_count();
  run_episode(170);  // syncs at steps 0, 80, 160
  CHECK(agent.sync_count() - before == 3);
  run_episode(50);  // one more at step 0
  CHECK(agent.sync_count() - before == 4);

  // after a sync, online and target nets agree exactly
  const Vec phi_probe = maze.rbf({1.0, 1.0});
  agent.begin_episode(1, phi_probe);
  agent.select_action(phi_probe);  // step 0 sync
  for (int a = 0; a < 4; ++a)
    CHECK((agent.net(0).forward(phi_probe, a) - agent.target_net(0).forward(phi_probe, a))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("neural ssr improves monotonically on a fixed-goal maze") {
  RunConfig cfg = profile_defaults(Profile::Exp3, AgentKind::Ssr);
  cfg.seed = 21;
  cfg.episodes = 480;
  cfg.total_step_budget = 1000000000;
  cfg.episodes_per_task = 1000000;  // the goal never moves
  cfg.epsilon = 0.35;
  cfg.epsilon_anneal_episodes = 100;
  cfg.layout_file = std::string(BSR_DATA_DIR) + "/open8.txt";

  const auto art = bsr::harness::run_experiment(cfg);
  REQUIRE(art.episodes.size() == 480);
  auto window_mean = [&](int lo, int hi) {
    double sum = 0;
    for (int i = lo; i < hi; ++i) sum += art.episodes[i].steps;
    return sum / (hi - lo);
  };
  const double w0 = window_mean(0, 160);
  const double w1 = window_mean(160, 320);
  const double w2 = window_mean(320, 480);
  CHECK(w1 < w0);
  CHECK(w2 < w1);
}
