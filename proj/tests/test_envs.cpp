#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "bsr/envs.hpp"

using namespace bsr;
using namespace bsr::envs;

TEST_CASE("layout parsing and validation") {
  const auto g = GridLayout::parse("..\n#.\n");
  CHECK(g.side() == 2);
  CHECK(g.blocked(1, 0));
  CHECK_FALSE(g.blocked(0, 1));
  CHECK(g.free_cells().size() == 3);

  CHECK_THROWS_AS(GridLayout::parse("..\n.\n"), ConfigError);
  CHECK_THROWS_AS(GridLayout::parse("..\nx.\n"), ConfigError);
  CHECK_THROWS_AS(GridLayout::parse(""), ConfigError);
}

TEST_CASE("shipped layouts match the built-in ones and are connected") {
  CHECK(GridLayout::default_maze().connected());
  CHECK(GridLayout::open_maze().connected());
  CHECK(GridLayout::ymaze().connected());
  CHECK(GridLayout::default_maze().side() == 8);
  CHECK(GridLayout::open_maze().free_cells().size() == 64);

  std::ifstream maze(std::string(BSR_DATA_DIR) + "/maze8.txt");
  REQUIRE(maze.good());
  std::stringstream ss;
  ss << maze.rdbuf();
  CHECK(GridLayout::parse(ss.str()).to_text() == GridLayout::default_maze().to_text());

  std::ifstream ym(std::string(BSR_DATA_DIR) + "/ymaze8.txt");
  REQUIRE(ym.good());
  std::stringstream ss2;
  ss2 << ym.rdbuf();
  CHECK(GridLayout::parse(ss2.str()).to_text() == GridLayout::ymaze().to_text());
}

TEST_CASE("quadrants") {
  CHECK(quadrant(0, 8) == 0);
  CHECK(quadrant(7, 8) == 1);
  CHECK(quadrant(56, 8) == 2);
  CHECK(quadrant(63, 8) == 3);
  CHECK(opposite_quadrant(0) == 3);
  CHECK(opposite_quadrant(1) == 2);
}

TEST_CASE("grid_step dynamics") {
  const auto& g = GridLayout::default_maze();

  SUBCASE("exterior wall: stay in place, no reward") {
    const auto out = grid_step(g, 0, kUp, 63);
    CHECK(out.s_next == 0);
    CHECK(out.reward == 0.0);
    CHECK_FALSE(out.terminal);
  }
  SUBCASE("interior wall blocks") {
    // (1,1) is blocked in the default maze; stepping down from (0,1) stays
    const auto out = grid_step(g, 1, kDown, 63);
    CHECK(out.s_next == 1);
  }
  SUBCASE("goal landing pays 10 and terminates") {
    const auto out = grid_step(g, 62, kRight, 63);
    CHECK(out.s_next == 63);
    CHECK(out.reward == 10.0);
    CHECK(out.terminal);
  }
  SUBCASE("puddle entry costs 1 and does not terminate") {
    std::vector<char> puddles(64, 0);
    puddles[1] = 1;
    const auto out = grid_step(g, 0, kRight, 63, &puddles);
    CHECK(out.s_next == 1);
    CHECK(out.reward == -1.0);
    CHECK_FALSE(out.terminal);
  }
}

TEST_CASE("grid maze schedule resamples reachable tasks on the boundary") {
  Rng schedule(3, StreamRole::Schedule);
  GridMazeEnv env(GridLayout::default_maze(), false, 20);

  const auto first = env.begin_episode(0, schedule);
  CHECK(first.changed);
  CHECK(first.goal == env.goal_state());
  CHECK(first.true_w[env.goal_state()] == 10.0);
  CHECK(first.true_w.sum() == 10.0);
  const int goal0 = env.goal_state(), start0 = env.start_state();
  CHECK(start0 != goal0);
  CHECK(env.layout().reachable(start0, goal0));

  for (int ep = 1; ep < 20; ++ep) {
    const auto c = env.begin_episode(ep, schedule);
    CHECK_FALSE(c.changed);
    CHECK(env.goal_state() == goal0);
    CHECK(env.start_state() == start0);
  }
  const auto c20 = env.begin_episode(20, schedule);
  CHECK(c20.changed);
}

TEST_CASE("puddle world covers the opposite quadrant except walls") {
  Rng schedule(11, StreamRole::Schedule);
  GridMazeEnv env(GridLayout::default_maze(), true, 30);
  for (int task = 0; task < 20; ++task) {
    env.begin_episode(task * 30, schedule);
    const int gq = quadrant(env.goal_state(), 8);
    const int pq = opposite_quadrant(gq);
    int n_puddles = 0, n_free_in_quadrant = 0;
    for (int s = 0; s < 64; ++s) {
      if (env.puddles()[s]) {
        ++n_puddles;
        CHECK(quadrant(s, 8) == pq);
        CHECK_FALSE(env.layout().blocked_state(s));
      }
      if (!env.layout().blocked_state(s) && quadrant(s, 8) == pq) ++n_free_in_quadrant;
    }
    CHECK(n_puddles == n_free_in_quadrant);
    CHECK_FALSE(env.puddles()[env.start_state()]);
    CHECK_FALSE(env.puddles()[env.goal_state()]);
  }
}

TEST_CASE("forage env collects each reward once per trial") {
  Rng schedule(5, StreamRole::Schedule);
  ForageEnv env(GridLayout::open_maze(), 30);
  const auto change = env.begin_trial(0, schedule);
  CHECK(change.changed);
  const auto cells = env.reward_cells();
  CHECK(cells[0] != cells[1]);
  CHECK(cells[1] != cells[2]);
  CHECK(cells[0] != cells[2]);

  // walk onto reward cell 0 from its left or right neighbour
  const int target = cells[0];
  const int from = target % 8 > 0 ? target - 1 : target + 1;
  const int action = target % 8 > 0 ? kRight : kLeft;
  auto out = env.step(from, action);
  CHECK(out.s_next == target);
  CHECK(out.reward == 10.0);
  CHECK_FALSE(out.terminal);
  out = env.step(from, action);
  CHECK(out.reward == 0.0);  // already collected

  env.reset_trial();
  out = env.step(from, action);
  CHECK(out.reward == 10.0);

  // boundary keeps rewards within a session
  env.begin_trial(1, schedule);
  CHECK(env.reward_cells() == cells);
  env.begin_trial(30, schedule);
  CHECK(env.reward_cells() != cells);
}

TEST_CASE("forage value mask is pure and selective") {
  Vec w(4);
  w << 1, 2, 3, 4;
  std::vector<char> collected = {0, 1, 0, 1};
  const Vec masked = forage_value_mask(w, collected);
  CHECK(masked[0] == 1.0);
  CHECK(masked[1] == 0.0);
  CHECK(masked[2] == 3.0);
  CHECK(masked[3] == 0.0);
  CHECK(w[1] == 2.0);  // untouched

  const Vec same = forage_value_mask(w, std::vector<char>(4, 0));
  CHECK((same - w).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ymaze teleport and barriers") {
  YMazeEnv env(0, 20, 24, 10);
  Rng schedule(7, StreamRole::Schedule);

  SUBCASE("entering the top-right corner relocates to the top-left") {
    env.begin_episode(0, schedule);
    // (1,7) -> up -> (0,7) teleports to (0,0)
    const auto out = env.step(15, kUp);
    CHECK(out.s_next == 0);
  }
  SUBCASE("right from the top-left emerges below the top-right corner") {
    env.begin_episode(0, schedule);
    const auto out = env.step(0, kRight);
    CHECK(out.s_next == 15);  // (1,7)
    CHECK_FALSE(out.terminal);
  }
  SUBCASE("goals per trial type") {
    CHECK(YMazeEnv::goal_for_type(0) == 32);  // (4,0)
    CHECK(YMazeEnv::goal_for_type(1) == 0);
    CHECK(YMazeEnv::goal_for_type(2) == 0);
    CHECK(YMazeEnv::goal_for_type(3) == 39);  // (4,7)
  }
  SUBCASE("teleport arrival at the goal pays out") {
    // force a barrier trial with the top goal
    YMazeEnv env2(0, 1, 24, 10);
    Rng s2(1, StreamRole::Schedule);
    for (int ep = 0; ep < 50; ++ep) {
      env2.begin_episode(ep, s2);
      if (env2.trial_type() == 1) break;
    }
    REQUIRE(env2.trial_type() == 1);
    const auto out = env2.step(15, kUp);
    CHECK(out.s_next == 0);
    CHECK(out.reward == 10.0);
    CHECK(out.terminal);
  }
  SUBCASE("barriers block exactly one of the two vertical routes") {
    YMazeEnv env3(0, 1, 24, 10);
    Rng s3(2, StreamRole::Schedule);
    for (int ep = 0; ep < 100; ++ep) {
      env3.begin_episode(ep, s3);
      if (env3.trial_type() == 1) {
        // right route blocked at (2,7): moving down from (1,7) stays
        CHECK(env3.step(15, kDown).s_next == 15);
        // left route open: (1,0) down to (2,0)
        CHECK(env3.step(8, kDown).s_next == 16);
      } else if (env3.trial_type() == 2) {
        CHECK(env3.step(8, kDown).s_next == 8);
        CHECK(env3.step(15, kDown).s_next == 23);
      }
    }
  }
  SUBCASE("block schedule has exactly 3 type changes per block") {
    YMazeEnv env4(0, 20, 24, 5);
    Rng s4(3, StreamRole::Schedule);
    std::vector<int> types;
    for (int ep = 0; ep < env4.total_episodes(); ++ep) {
      env4.begin_episode(ep, s4);
      types.push_back(env4.trial_type());
    }
    for (int block = 0; block < 24; ++block) {
      int changes = 0;
      std::set<int> seen;
      for (int i = 0; i < 4 * 5; ++i) {
        const int idx = block * 20 + i;
        seen.insert(types[idx]);
        if (i > 0 && types[idx] != types[idx - 1]) ++changes;
      }
      CHECK(changes == 3);
      CHECK(seen.size() == 4);  // all trial types appear in every block
    }
  }
  SUBCASE("routes exist for every trial type") {
    YMazeEnv env5(0, 1, 24, 10);
    Rng s5(4, StreamRole::Schedule);
    for (int ep = 0; ep < 100; ++ep) {
      env5.begin_episode(ep, s5);
      // simple BFS over env dynamics
      std::vector<char> seen(64, 0);
      std::vector<int> queue{env5.start_state()};
      seen[env5.start_state()] = 1;
      bool reached = false;
      for (size_t qi = 0; qi < queue.size() && !reached; ++qi) {
        for (int a = 0; a < 4; ++a) {
          const auto out = env5.step(queue[qi], a);
          if (out.terminal) reached = true;
          if (!seen[out.s_next]) {
            seen[out.s_next] = 1;
            queue.push_back(out.s_next);
          }
        }
      }
      CHECK(reached);
    }
  }
}

TEST_CASE("continuous maze dynamics") {
  ContinuousMaze maze(GridLayout::default_maze(), 30);
  Rng schedule(5, StreamRole::Schedule);
  maze.begin_episode(0, schedule);

  SUBCASE("zero-noise step moves exactly 0.3") {
    ContinuousMaze quiet(GridLayout::open_maze(), 30, 0.0);
    Rng s(6, StreamRole::Schedule), noise(6, StreamRole::EnvNoise);
    quiet.begin_episode(0, s);
    const Vec2 pos{1.5, 1.5};
    const auto out = quiet.step(pos, kRight, noise);
    if (!out.terminal) {
      CHECK(out.pos.x == doctest::Approx(1.8));
      CHECK(out.pos.y == doctest::Approx(1.5));
    }
  }
  SUBCASE("wall collision keeps the agent in place") {
    ContinuousMaze quiet(GridLayout::default_maze(), 30, 0.0);
    Rng s(7, StreamRole::Schedule), noise(7, StreamRole::EnvNoise);
    quiet.begin_episode(0, s);
    // cell (1,1) is a wall: x in [0.375, 0.75], y in [0.375, 0.75]
    const Vec2 pos{0.3, 0.5};
    const auto out = quiet.step(pos, kRight, noise);
    CHECK(out.pos.x == pos.x);
    CHECK(out.pos.y == pos.y);
  }
  SUBCASE("board edge keeps the agent in place") {
    ContinuousMaze quiet(GridLayout::open_maze(), 30, 0.0);
    Rng s(8, StreamRole::Schedule), noise(8, StreamRole::EnvNoise);
    quiet.begin_episode(0, s);
    const auto out = quiet.step({0.1, 1.0}, kLeft, noise);
    CHECK(out.pos.x == 0.1);
  }
  SUBCASE("goal radius terminates with reward 10") {
    ContinuousMaze quiet(GridLayout::open_maze(), 30, 0.0);
    Rng s(9, StreamRole::Schedule), noise(9, StreamRole::EnvNoise);
    quiet.begin_episode(0, s);
    const Vec2 goal = quiet.goal();
    const Vec2 near{goal.x - 0.3 - 0.2, goal.y};
    if (!quiet.blocked_at(near) && near.x >= 0.0) {
      const auto out = quiet.step(near, kRight, noise);
      CHECK(out.terminal);
      CHECK(out.reward == 10.0);
    }
  }
  SUBCASE("thin-wall tunneling is impossible") {
    ContinuousMaze quiet(GridLayout::default_maze(), 30, 0.0);
    // segment crossing the wall cell (1,1) entirely
    CHECK(quiet.path_blocked({0.3, 0.5}, {0.9, 0.5}));
    CHECK_FALSE(quiet.path_blocked({0.2, 0.2}, {0.3, 0.2}));
  }
}

TEST_CASE("rbf embedding") {
  ContinuousMaze maze(GridLayout::open_maze(), 30);

  SUBCASE("peak value at a center") {
    // center of cell (0,0) of the 10x10 lattice is (0.15, 0.15)
    const Vec phi = maze.rbf({0.15, 0.15});
    CHECK(phi[0] == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
    CHECK(phi.maxCoeff() == doctest::Approx(phi[0]));
  }
  SUBCASE("distant centers contribute almost nothing") {
    const Vec phi = maze.rbf({0.0, 0.0});
    CHECK(phi[99] < 1e-8);  // center (2.85, 2.85) is far away
  }
  SUBCASE("trace accumulates with decay 0.9") {
    FeatureTrace trace(100);
    const Vec phi = maze.rbf({1.0, 1.0});
    trace.observe(phi);
    const Vec second = trace.observe(phi);
    CHECK((second - 1.9 * phi).cwiseAbs().maxCoeff() < 1e-12);
    trace.reset();
    CHECK(trace.value().cwiseAbs().maxCoeff() == 0.0);
  }
}
