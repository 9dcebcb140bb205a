#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "bsr/rng.hpp"
#include "bsr/types.hpp"

namespace bsr::envs {

// ASCII grid layout: '#' blocked, '.' free, rows top to bottom.
class GridLayout {
 public:
  static GridLayout parse(const std::string& text);
  static GridLayout load_file(const std::string& path);
  static const GridLayout& default_maze();  // interior walls, all experiments I-III
  static const GridLayout& open_maze();     // no interior walls (foraging)
  static const GridLayout& ymaze();

  int side() const { return side_; }
  int state_count() const { return side_ * side_; }
  bool blocked(int row, int col) const { return blocked_[row * side_ + col] != 0; }
  bool blocked_state(int s) const { return blocked_[s] != 0; }
  const std::vector<int>& free_cells() const { return free_; }

  // BFS reachability; extra_blocked adds temporary walls (Y-maze barriers).
  bool reachable(int from, int to, const std::vector<char>* extra_blocked = nullptr) const;
  bool connected() const;

  std::string to_text() const;

 private:
  int side_ = 0;
  std::vector<char> blocked_;
  std::vector<int> free_;
};

int quadrant(int state, int side);           // 0 NW, 1 NE, 2 SW, 3 SE
int opposite_quadrant(int q);

struct StepOutcome {
  int s_next = 0;
  double reward = 0.0;
  bool terminal = false;
};

// One deterministic grid move: blocked or out-of-bounds targets leave the
// agent in place; landing on the goal pays and terminates; puddle landings
// pay the penalty on top.
StepOutcome grid_step(const GridLayout& g, int s, int a, int goal,
                      const std::vector<char>* puddles = nullptr,
                      double goal_reward = 10.0, double puddle_penalty = -1.0,
                      const std::vector<char>* barriers = nullptr);

// What a task boundary publishes. The harness decides who hears about it:
// Experiment I signals every agent and provides the reward function; the
// unsignalled experiments forward the bare signal to GPI only.
struct TaskChange {
  bool changed = false;
  int goal = -1;
  Vec true_w;          // 10 * e_goal when a goal exists
  int trial_type = -1; // ymaze
};

class GridMazeEnv {
 public:
  // start_change_every = 0 keeps the start on the task cadence; a positive
  // value moves the start on its own schedule (decoupled from the rewards).
  GridMazeEnv(GridLayout layout, bool with_puddles, int episodes_per_task,
              int start_change_every = 0, double goal_reward = 10.0,
              double puddle_penalty = -1.0);

  TaskChange begin_episode(int episode_index, Rng& schedule_rng);
  StepOutcome step(int s, int a) const;

  int start_state() const { return start_; }
  int goal_state() const { return goal_; }
  const std::vector<char>& puddles() const { return puddles_; }
  const GridLayout& layout() const { return layout_; }
  int state_count() const { return layout_.state_count(); }

 private:
  void resample_task(Rng& rng);
  void resample_start(Rng& rng);

  GridLayout layout_;
  bool with_puddles_;
  int episodes_per_task_;
  int start_change_every_;
  double goal_reward_, puddle_penalty_;
  int start_ = -1, goal_ = -1;
  std::vector<char> puddles_;
};

// Open maze, three hidden rewards per session, collected within a trial.
class ForageEnv {
 public:
  ForageEnv(GridLayout layout, int trials_per_session, double reward_value = 10.0);

  TaskChange begin_trial(int trial_index, Rng& schedule_rng);  // session boundary resample
  StepOutcome step(int s, int a);  // marks pickups; terminal when all collected

  void reset_trial();
  const std::vector<char>& collected() const { return collected_; }
  const std::array<int, 3>& reward_cells() const { return rewards_; }
  const GridLayout& layout() const { return layout_; }
  int state_count() const { return layout_.state_count(); }
  bool all_collected() const { return n_collected_ == 3; }
  int trials_per_session() const { return trials_per_session_; }

 private:
  GridLayout layout_;
  int trials_per_session_;
  double reward_value_;
  std::array<int, 3> rewards_{-1, -1, -1};
  std::vector<char> collected_;
  int n_collected_ = 0;
};

// Copy of w with already-collected reward entries zeroed; evaluation only,
// the stored weights are untouched.
Vec forage_value_mask(const Vec& w, const std::vector<char>& collected);

// Grid-world double-Y maze. Trial types: 0 = left goal, 1 = top goal with the
// right route barred, 2 = top goal with the left route barred, 3 = right
// goal. The top-right corner is the same state as the top-left: entering it
// relocates the agent, and stepping right from the top-left corner emerges
// below the top-right corner.
class YMazeEnv {
 public:
  YMazeEnv(int pretrain_episodes, int pretrain_change_every, int blocks,
           int segment_episodes);

  TaskChange begin_episode(int episode_index, Rng& schedule_rng);
  StepOutcome step(int s, int a) const;

  int start_state() const;
  int trial_type() const { return trial_type_; }
  int goal_state() const { return goal_; }
  bool barrier_trial() const { return trial_type_ == 1 || trial_type_ == 2; }
  bool in_pretrain(int episode_index) const { return episode_index < pretrain_episodes_; }
  int total_episodes() const {
    return pretrain_episodes_ + blocks_ * 4 * segment_episodes_;
  }
  const GridLayout& layout() const { return layout_; }
  int state_count() const { return layout_.state_count(); }

  static int goal_for_type(int type);

 private:
  void set_trial_type(int type);

  GridLayout layout_;
  int pretrain_episodes_, pretrain_change_every_, blocks_, segment_episodes_;
  int trial_type_ = 0;
  int goal_ = -1;
  std::vector<char> barriers_;
  std::vector<std::array<int, 4>> block_order_;  // fixed schedule, common to all runs
};

// Continuous copy of the maze: side length 3, walls scaled from the grid
// layout, Gaussian step noise, RBF state embedding with a decaying trace.
struct Vec2 {
  double x = 0.0, y = 0.0;
};

class ContinuousMaze {
 public:
  static constexpr double kSide = 3.0;
  static constexpr double kStepLength = 0.3;
  static constexpr double kGoalRadius = 0.25;
  static constexpr int kEmbeddingDim = 100;

  ContinuousMaze(GridLayout layout, int episodes_per_task,
                 double noise_sd = 0.1414213562373095 /* sqrt(0.02) */);

  TaskChange begin_episode(int episode_index, Rng& schedule_rng);

  struct COutcome {
    Vec2 pos;
    double reward = 0.0;
    bool terminal = false;
  };
  COutcome step(Vec2 pos, int a, Rng& noise_rng) const;

  Vec2 start() const { return start_; }
  Vec2 goal() const { return goal_; }
  double noise_sd() const { return noise_sd_; }
  void set_noise_sd(double sd) { noise_sd_ = sd; }

  bool blocked_at(Vec2 p) const;                 // touching any wall or outside
  bool path_blocked(Vec2 from, Vec2 to) const;   // segment crosses/touches a wall

  Vec rbf(Vec2 pos) const;

 private:
  Vec2 sample_free_point(Rng& rng, const Vec2* away_from, double min_dist) const;

  GridLayout layout_;
  int episodes_per_task_;
  double noise_sd_;
  Vec2 start_, goal_;
  struct Rect {
    double x0, y0, x1, y1;
  };
  std::vector<Rect> walls_;
};

// Discounted sum of past embeddings; the state the networks actually see.
class FeatureTrace {
 public:
  explicit FeatureTrace(int dim, double decay = 0.9)
      : trace_(Vec::Zero(dim)), decay_(decay) {}
  const Vec& observe(const Vec& phi) {
    trace_ = phi + decay_ * trace_;
    return trace_;
  }
  void reset() { trace_.setZero(); }
  const Vec& value() const { return trace_; }

 private:
  Vec trace_;
  double decay_;
};

}  // namespace bsr::envs
