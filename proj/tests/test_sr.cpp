#include <doctest.h>

#include "bsr/envs.hpp"
#include "bsr/rng.hpp"
#include "bsr/sr.hpp"

using namespace bsr;
using sr::SuccessorMap;

TEST_CASE("q_values is the row-weight dot product") {
  SuccessorMap m(1, 2, 2);
  m.row(0, 0) << 1, 0;
  m.row(0, 1) << 0, 1;
  Vec w(2);
  w << 10, 0;
  const Vec q = sr::q_values(m, 0, w);
  CHECK(q[0] == 10.0);
  CHECK(q[1] == 0.0);

  const Vec q0 = sr::q_values(m, 0, Vec::Zero(2));
  CHECK(q0[0] == 0.0);
  CHECK(q0[1] == 0.0);

  Vec bad(3);
  CHECK_THROWS_AS(sr::q_values(m, 0, bad), ConfigError);
}

TEST_CASE("q_values against the analytic SR of a uniform two-state chain") {
  // two states, action j moves to state j; uniform policy
  Mat p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  auto step = [](int, int a) { return a; };
  const Mat rows = sr::analytic_state_action_sr(step, p, 2, 0.5);
  SuccessorMap m(2, 2, 2);
  for (int s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) m.row(s, a) = rows.row(s * 2 + a);
  Vec w(2);
  w << 1, 0;
  for (int s = 0; s < 2; ++s) {
    const Vec q = sr::q_values(m, s, w);
    CHECK(q[0] == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("q_values scales linearly in w and greedy action is scale invariant") {
  Rng rng(5, StreamRole::Init);
  SuccessorMap m(3, 4, 5);
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 4; ++a)
      for (int d = 0; d < 5; ++d) m.row(s, a)[d] = rng.normal();
  Vec w(5);
  for (int d = 0; d < 5; ++d) w[d] = rng.normal();
  for (double c : {0.5, 2.0, 7.3}) {
    for (int s = 0; s < 3; ++s) {
      const Vec q1 = sr::q_values(m, s, w);
      const Vec q2 = sr::q_values(m, s, (c * w).eval());
      for (int a = 0; a < 4; ++a) CHECK(q2[a] == doctest::Approx(c * q1[a]));
      CHECK(sr::greedy_action(m, s, w) == sr::greedy_action(m, s, (c * w).eval()));
    }
  }
}

TEST_CASE("td_update examples") {
  SUBCASE("zero map: only the feature term enters") {
    SuccessorMap m(3, 4, 3);
    Transition t{0, 1, 2, 0.0, 0};
    sr::td_update(m, t, Vec::Zero(3), 0.9, 0.5, 1);
    CHECK(m.row(0, 1)[2] == doctest::Approx(0.5));
    CHECK(m.row(0, 1)[0] == 0.0);
    // everything else untouched
    CHECK(m.row(0, 0).sum() == 0.0);
    CHECK(m.row(2, 1).sum() == 0.0);
  }
  SUBCASE("zero step size leaves the map unchanged") {
    SuccessorMap m(3, 4, 3);
    m.row(0, 1) << 1, 2, 3;
    Transition t{0, 1, 2, 0.0, 0};
    sr::td_update(m, t, Vec::Ones(3), 0.9, 0.0, 1);
    CHECK(m.row(0, 1)[0] == 1.0);
    CHECK(m.row(0, 1)[1] == 2.0);
    CHECK(m.row(0, 1)[2] == 3.0);
  }
  SUBCASE("divisor spreads the learning mass") {
    SuccessorMap a(2, 4, 2), b(2, 4, 2);
    Transition t{0, 0, 1, 0.0, 0};
    sr::td_update(a, t, Vec::Zero(2), 0.9, 0.4, 4);
    sr::td_update(b, t, Vec::Zero(2), 0.9, 0.1, 1);
    CHECK(a.row(0, 0)[1] == doctest::Approx(b.row(0, 0)[1]));
  }
  SUBCASE("update touches only row (s,a)") {
    Rng rng(5, StreamRole::Init);
    SuccessorMap m(4, 4, 4);
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 4; ++a)
        for (int d = 0; d < 4; ++d) m.row(s, a)[d] = rng.normal();
    SuccessorMap before = m;
    Vec w(4);
    for (int d = 0; d < 4; ++d) w[d] = rng.normal();
    Transition t{1, 2, 3, 0.0, 0};
    sr::td_update(m, t, w, 0.9, 0.3, 1);
    for (int s = 0; s < 4; ++s)
      for (int a = 0; a < 4; ++a) {
        if (s == 1 && a == 2) continue;
        CHECK((m.row(s, a) - before.row(s, a)).cwiseAbs().maxCoeff() == 0.0);
      }
    CHECK((m.row(1, 2) - before.row(1, 2)).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("td_update converges to the analytic SR on a three-state ring") {
  // every action advances the ring, so the greedy bootstrap equals the
  // (deterministic) uniform policy
  const int n = 3;
  Mat p = Mat::Zero(n, n);
  for (int s = 0; s < n; ++s) p(s, (s + 1) % n) = 1.0;
  auto step = [&](int s, int) { return (s + 1) % n; };
  const Mat expected = sr::analytic_state_action_sr(step, p, 4, 0.5);

  SuccessorMap m(n, 4, n);
  Rng rng(1, StreamRole::Init);
  int s = 0;
  for (int iter = 0; iter < 20000; ++iter) {
    const int a = rng.below(4);
    const int s2 = step(s, a);
    sr::td_update(m, {s, a, s2, 0.0, 0}, Vec::Zero(n), 0.5, 0.2, 1);
    s = s2;
  }
  double err = 0.0;
  for (int st = 0; st < n; ++st)
    for (int a = 0; a < 4; ++a)
      err = std::max(err, (m.row(st, a) - expected.row(st * 4 + a)).cwiseAbs().maxCoeff());
  CHECK(err < 1e-3);
}

TEST_CASE("td fixed point matches the analytic SR for a frozen policy on a 4x4 maze") {
  const auto layout = envs::GridLayout::parse(
      "....\n"
      ".#..\n"
      "..#.\n"
      "....\n");
  const int n = layout.state_count();
  const int goal = 15;

  // shortest-path policy via BFS from the goal
  std::vector<int> policy(n, 0);
  std::vector<int> dist(n, 1 << 20);
  dist[goal] = 0;
  std::vector<int> queue{goal};
  auto step = [&](int s, int a) {
    return envs::grid_step(layout, s, a, -1).s_next;
  };
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    const int s = queue[qi];
    for (int a = 0; a < 4; ++a) {
      const int t = step(s, a);
      if (t != s && dist[t] > dist[s] + 1) {
        dist[t] = dist[s] + 1;
        queue.push_back(t);
      }
    }
  }
  for (int s = 0; s < n; ++s) {
    if (layout.blocked_state(s)) continue;
    for (int a = 0; a < 4; ++a) {
      const int t = step(s, a);
      if (t != s && dist[t] == dist[s] - 1) {
        policy[s] = a;
        break;
      }
    }
  }

  Mat p = Mat::Zero(n, n);
  for (int s = 0; s < n; ++s) p(s, step(s, policy[s])) = 1.0;
  const Mat expected = sr::analytic_state_action_sr(step, p, 4, 0.9);

  SuccessorMap m(n, 4, n);
  for (int sweep = 0; sweep < 3000; ++sweep)
    for (int s = 0; s < n; ++s)
      for (int a = 0; a < 4; ++a) {
        const int t = step(s, a);
        sr::td_update_with_bootstrap(m, s, a, t, policy[t], 0.9, 0.5);
      }
  double err = 0.0;
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < 4; ++a)
      err = std::max(err, (m.row(s, a) - expected.row(s * 4 + a)).cwiseAbs().maxCoeff());
  CHECK(err < 1e-3);
}

TEST_CASE("reward weight regression") {
  SUBCASE("one-hot with unit learning rate regresses exactly") {
    Vec w = Vec::Zero(4);
    sr::reward_weight_update(w, one_hot(2, 4), 10.0, 1.0);
    CHECK(w[2] == 10.0);
    CHECK(w.sum() == 10.0);
  }
  SUBCASE("zero error leaves w unchanged") {
    Vec w(3);
    w << 1, 2, 3;
    const Vec phi = one_hot(1, 3);
    sr::reward_weight_update(w, phi, 2.0, 0.7);
    CHECK(w[1] == 2.0);
  }
  SUBCASE("index fast path equals the general path") {
    Vec a(5), b(5);
    for (int i = 0; i < 5; ++i) a[i] = b[i] = 0.3 * i;
    sr::reward_weight_update(a, one_hot(3, 5), 4.0, 0.25);
    sr::reward_weight_update(b, 3, 4.0, 0.25);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("LMS error decreases under RBF features") {
    Rng rng(9, StreamRole::Init);
    const int d = 16;
    Vec truth(d), w = Vec::Zero(d);
    for (int i = 0; i < d; ++i) truth[i] = rng.normal();
    double first_window = 0, last_window = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      Vec phi(d);
      for (int j = 0; j < d; ++j) {
        const double c = static_cast<double>(j) / d;
        const double x = rng.uniform01();
        phi[j] = std::exp(-(x - c) * (x - c) / 0.02);
      }
      const double r = phi.dot(truth);
      const double err = std::abs(r - phi.dot(w));
      if (i < 1000) first_window += err;
      if (i >= n - 1000) last_window += err;
      sr::reward_weight_update(w, phi, r, 0.005);
    }
    CHECK(last_window < first_window);
  }
}

TEST_CASE("analytic_sr closed forms") {
  CHECK(sr::analytic_sr(Mat::Identity(4, 4), 0.5)(2, 2) == doctest::Approx(2.0));

  Mat p(2, 2);
  p << 0, 1, 1, 0;
  CHECK(sr::analytic_sr(p, 0.0)(0, 1) == doctest::Approx(1.0));
  const Mat m = sr::analytic_sr(p, 0.5);
  CHECK(m(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(m(0, 1) == doctest::Approx(4.0 / 3.0));
  CHECK(m(1, 0) == doctest::Approx(4.0 / 3.0));

  Mat bad(2, 2);
  bad << 0.5, 0.4, 0.5, 0.5;
  CHECK_THROWS_AS(sr::analytic_sr(bad, 0.5), ConfigError);
  CHECK_THROWS_AS(sr::analytic_sr(p, 1.0), ConfigError);
}
