#include "bsr/envs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

namespace bsr::envs {

namespace {

const char* kDefaultMazeText =
    "........\n"
    ".##..#..\n"
    ".....#..\n"
    ".###.#..\n"
    "........\n"
    "..#.###.\n"
    "..#.....\n"
    "........\n";

const char* kOpenMazeText =
    "........\n"
    "........\n"
    "........\n"
    "........\n"
    "........\n"
    "........\n"
    "........\n"
    "........\n";

// Double-Y rendered on the grid: a stem up the middle, one cross corridor,
// and two edge corridors meeting at the shared top corner state.
const char* kYMazeText =
    ".######.\n"
    ".######.\n"
    ".######.\n"
    ".######.\n"
    "........\n"
    "###.####\n"
    "###.####\n"
    "###.####\n";

constexpr int kYMazeStart = 7 * 8 + 3;     // bottom of the stem
constexpr int kYMazeTopLeft = 0;           // shared top goal state
constexpr int kYMazeTopRight = 7;          // teleports to top-left
constexpr int kYMazeLeftGoal = 4 * 8 + 0;
constexpr int kYMazeRightGoal = 4 * 8 + 7;
constexpr int kYMazeBarrierRight = 2 * 8 + 7;  // trial type 1
constexpr int kYMazeBarrierLeft = 2 * 8 + 0;   // trial type 2

int row_of(int s, int side) { return s / side; }
int col_of(int s, int side) { return s % side; }

int move_target(int s, int a, int side) {
  int r = row_of(s, side), c = col_of(s, side);
  switch (a) {
    case kUp: --r; break;
    case kDown: ++r; break;
    case kLeft: --c; break;
    case kRight: ++c; break;
    default: throw ConfigError("grid_step: invalid action");
  }
  if (r < 0 || r >= side || c < 0 || c >= side) return -1;
  return r * side + c;
}

}  // namespace

GridLayout GridLayout::parse(const std::string& text) {
  GridLayout g;
  std::vector<std::string> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw ConfigError("layout: empty");
  g.side_ = static_cast<int>(rows.size());
  g.blocked_.assign(g.side_ * g.side_, 0);
  for (int r = 0; r < g.side_; ++r) {
    if (static_cast<int>(rows[r].size()) != g.side_)
      throw ConfigError("layout: grid must be square, row " + std::to_string(r) +
                        " has width " + std::to_string(rows[r].size()));
    for (int c = 0; c < g.side_; ++c) {
      const char ch = rows[r][c];
      if (ch == '#') g.blocked_[r * g.side_ + c] = 1;
      else if (ch != '.') throw ConfigError(std::string("layout: unexpected character '") + ch + "'");
    }
  }
  for (int s = 0; s < g.side_ * g.side_; ++s)
    if (!g.blocked_[s]) g.free_.push_back(s);
  if (g.free_.empty()) throw ConfigError("layout: no free cells");
  return g;
}

GridLayout GridLayout::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open layout file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  GridLayout g = parse(ss.str());
  if (g.side() != 8) throw ConfigError("layout: grid experiments expect an 8x8 maze");
  return g;
}

const GridLayout& GridLayout::default_maze() {
  static const GridLayout g = parse(kDefaultMazeText);
  return g;
}
const GridLayout& GridLayout::open_maze() {
  static const GridLayout g = parse(kOpenMazeText);
  return g;
}
const GridLayout& GridLayout::ymaze() {
  static const GridLayout g = parse(kYMazeText);
  return g;
}

bool GridLayout::reachable(int from, int to, const std::vector<char>* extra) const {
  if (blocked_state(from) || blocked_state(to)) return false;
  if (extra && ((*extra)[from] || (*extra)[to])) return false;
  std::vector<char> seen(state_count(), 0);
  std::deque<int> queue{from};
  seen[from] = 1;
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    if (s == to) return true;
    for (int a = 0; a < kNumActions; ++a) {
      const int t = move_target(s, a, side_);
      if (t < 0 || blocked_[t] || seen[t]) continue;
      if (extra && (*extra)[t]) continue;
      seen[t] = 1;
      queue.push_back(t);
    }
  }
  return false;
}

bool GridLayout::connected() const {
  for (int s : free_)
    if (!reachable(free_.front(), s)) return false;
  return true;
}

std::string GridLayout::to_text() const {
  std::string out;
  for (int r = 0; r < side_; ++r) {
    for (int c = 0; c < side_; ++c) out += blocked(r, c) ? '#' : '.';
    out += '\n';
  }
  return out;
}

int quadrant(int state, int side) {
  const int half = side / 2;
  const int r = row_of(state, side), c = col_of(state, side);
  return (r >= half ? 2 : 0) + (c >= half ? 1 : 0);
}

int opposite_quadrant(int q) { return 3 - q; }

StepOutcome grid_step(const GridLayout& g, int s, int a, int goal,
                      const std::vector<char>* puddles, double goal_reward,
                      double puddle_penalty, const std::vector<char>* barriers) {
  int t = move_target(s, a, g.side());
  if (t < 0 || g.blocked_state(t) || (barriers && (*barriers)[t])) t = s;
  StepOutcome out;
  out.s_next = t;
  if (puddles && (*puddles)[t]) out.reward += puddle_penalty;
  if (t == goal) {
    out.reward += goal_reward;
    out.terminal = true;
  }
  return out;
}

GridMazeEnv::GridMazeEnv(GridLayout layout, bool with_puddles, int episodes_per_task,
                         int start_change_every, double goal_reward,
                         double puddle_penalty)
    : layout_(std::move(layout)), with_puddles_(with_puddles),
      episodes_per_task_(episodes_per_task), start_change_every_(start_change_every),
      goal_reward_(goal_reward), puddle_penalty_(puddle_penalty),
      puddles_(layout_.state_count(), 0) {}

void GridMazeEnv::resample_start(Rng& rng) {
  const auto& free = layout_.free_cells();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const int start = free[rng.below(static_cast<int>(free.size()))];
    if (start == goal_) continue;
    if (with_puddles_ && puddles_[start]) continue;
    if (!layout_.reachable(start, goal_)) continue;
    start_ = start;
    return;
  }
  throw NumericError("grid maze: failed to sample a start");
}

void GridMazeEnv::resample_task(Rng& rng) {
  const auto& free = layout_.free_cells();
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const int goal = free[rng.below(static_cast<int>(free.size()))];
    std::vector<char> puddles(layout_.state_count(), 0);
    if (with_puddles_) {
      const int pq = opposite_quadrant(quadrant(goal, layout_.side()));
      for (int s : free)
        if (quadrant(s, layout_.side()) == pq) puddles[s] = 1;
    }
    const int start = free[rng.below(static_cast<int>(free.size()))];
    if (start == goal) continue;
    if (with_puddles_ && puddles[start]) continue;
    if (!layout_.reachable(start, goal)) continue;
    start_ = start;
    goal_ = goal;
    puddles_ = std::move(puddles);
    return;
  }
  throw NumericError("grid maze: failed to sample a reachable task");
}

TaskChange GridMazeEnv::begin_episode(int episode_index, Rng& schedule_rng) {
  TaskChange change;
  if (episode_index % episodes_per_task_ == 0) {
    resample_task(schedule_rng);
    change.changed = true;
    change.goal = goal_;
    change.true_w = Vec::Zero(layout_.state_count());
    change.true_w[goal_] = goal_reward_;
  } else if (start_change_every_ > 0 && episode_index % start_change_every_ == 0) {
    resample_start(schedule_rng);
  }
  return change;
}

StepOutcome GridMazeEnv::step(int s, int a) const {
  return grid_step(layout_, s, a, goal_, with_puddles_ ? &puddles_ : nullptr,
                   goal_reward_, puddle_penalty_);
}

ForageEnv::ForageEnv(GridLayout layout, int trials_per_session, double reward_value)
    : layout_(std::move(layout)), trials_per_session_(trials_per_session),
      reward_value_(reward_value), collected_(layout_.state_count(), 0) {}

TaskChange ForageEnv::begin_trial(int trial_index, Rng& schedule_rng) {
  TaskChange change;
  if (trial_index % trials_per_session_ == 0) {
    const auto& free = layout_.free_cells();
    std::array<int, 3> cells{-1, -1, -1};
    for (int i = 0; i < 3; ++i) {
      int cell;
      do {
        cell = free[schedule_rng.below(static_cast<int>(free.size()))];
      } while (cell == cells[0] || cell == cells[1]);
      cells[i] = cell;
    }
    rewards_ = cells;
    change.changed = true;
  }
  reset_trial();
  return change;
}

void ForageEnv::reset_trial() {
  std::fill(collected_.begin(), collected_.end(), 0);
  n_collected_ = 0;
}

StepOutcome ForageEnv::step(int s, int a) {
  int t = move_target(s, a, layout_.side());
  if (t < 0 || layout_.blocked_state(t)) t = s;
  StepOutcome out;
  out.s_next = t;
  const bool is_reward_cell =
      t == rewards_[0] || t == rewards_[1] || t == rewards_[2];
  if (is_reward_cell && !collected_[t]) {
    out.reward = reward_value_;
    collected_[t] = 1;
    ++n_collected_;
  }
  out.terminal = n_collected_ == 3;
  return out;
}

Vec forage_value_mask(const Vec& w, const std::vector<char>& collected) {
  Vec masked = w;
  for (int s = 0; s < w.size(); ++s)
    if (collected[s]) masked[s] = 0.0;
  return masked;
}

YMazeEnv::YMazeEnv(int pretrain_episodes, int pretrain_change_every, int blocks,
                   int segment_episodes)
    : layout_(GridLayout::ymaze()), pretrain_episodes_(pretrain_episodes),
      pretrain_change_every_(pretrain_change_every), blocks_(blocks),
      segment_episodes_(segment_episodes), barriers_(layout_.state_count(), 0) {
  // The block schedule mirrors a fixed experimental session structure: one
  // sequence, shared by every agent and seed, three type changes per block.
  Rng block_rng(0x59AA5Eull, StreamRole::Schedule);
  block_order_.resize(blocks_);
  for (auto& order : block_order_) {
    order = {0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(order[i], order[block_rng.below(i + 1)]);
  }
  set_trial_type(0);
}

int YMazeEnv::goal_for_type(int type) {
  switch (type) {
    case 0: return kYMazeLeftGoal;
    case 1:
    case 2: return kYMazeTopLeft;
    case 3: return kYMazeRightGoal;
    default: throw ConfigError("ymaze: invalid trial type");
  }
}

void YMazeEnv::set_trial_type(int type) {
  trial_type_ = type;
  goal_ = goal_for_type(type);
  std::fill(barriers_.begin(), barriers_.end(), 0);
  if (type == 1) barriers_[kYMazeBarrierRight] = 1;
  if (type == 2) barriers_[kYMazeBarrierLeft] = 1;
}

int YMazeEnv::start_state() const { return kYMazeStart; }

TaskChange YMazeEnv::begin_episode(int episode_index, Rng& schedule_rng) {
  TaskChange change;
  int type = trial_type_;
  if (episode_index < pretrain_episodes_) {
    if (episode_index % pretrain_change_every_ == 0) {
      type = schedule_rng.below(4);
      change.changed = true;
    }
  } else {
    const int i = episode_index - pretrain_episodes_;
    const int block = i / (4 * segment_episodes_);
    const int segment = (i % (4 * segment_episodes_)) / segment_episodes_;
    type = block_order_[block % blocks_][segment];
    change.changed = type != trial_type_ || i == 0;
  }
  if (change.changed) set_trial_type(type);
  change.trial_type = trial_type_;
  change.goal = goal_;
  change.true_w = Vec::Zero(layout_.state_count());
  change.true_w[goal_] = 10.0;
  return change;
}

StepOutcome YMazeEnv::step(int s, int a) const {
  // the two top corners are one physical state
  if (s == kYMazeTopLeft && a == kRight) {
    StepOutcome out;
    out.s_next = kYMazeTopRight + 8;  // the cell below the top-right corner
    return out;
  }
  StepOutcome out = grid_step(layout_, s, a, goal_, nullptr, 10.0, -1.0, &barriers_);
  if (out.s_next == kYMazeTopRight) {
    out.s_next = kYMazeTopLeft;
    if (out.s_next == goal_) {
      out.reward = 10.0;
      out.terminal = true;
    }
  }
  return out;
}

ContinuousMaze::ContinuousMaze(GridLayout layout, int episodes_per_task, double noise_sd)
    : layout_(std::move(layout)), episodes_per_task_(episodes_per_task),
      noise_sd_(noise_sd) {
  const double u = kSide / layout_.side();
  for (int r = 0; r < layout_.side(); ++r)
    for (int c = 0; c < layout_.side(); ++c)
      if (layout_.blocked(r, c))
        walls_.push_back({c * u, r * u, (c + 1) * u, (r + 1) * u});
}

bool ContinuousMaze::blocked_at(Vec2 p) const {
  if (p.x < 0.0 || p.x > kSide || p.y < 0.0 || p.y > kSide) return true;
  for (const Rect& w : walls_)
    if (p.x >= w.x0 && p.x <= w.x1 && p.y >= w.y0 && p.y <= w.y1) return true;
  return false;
}

bool ContinuousMaze::path_blocked(Vec2 from, Vec2 to) const {
  if (blocked_at(to)) return true;
  // segment vs closed rectangle, parametric slab clipping
  const double dx = to.x - from.x, dy = to.y - from.y;
  for (const Rect& w : walls_) {
    double t0 = 0.0, t1 = 1.0;
    bool miss = false;
    auto clip = [&](double p, double q) {
      // p * t <= q half-plane
      if (p == 0.0) {
        if (q < 0.0) miss = true;
      } else {
        const double r = q / p;
        if (p < 0.0) t0 = std::max(t0, r);
        else t1 = std::min(t1, r);
      }
    };
    clip(-dx, from.x - w.x0);
    clip(dx, w.x1 - from.x);
    clip(-dy, from.y - w.y0);
    clip(dy, w.y1 - from.y);
    if (!miss && t0 <= t1) return true;
  }
  return false;
}

Vec2 ContinuousMaze::sample_free_point(Rng& rng, const Vec2* away_from,
                                       double min_dist) const {
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vec2 p{rng.uniform01() * kSide, rng.uniform01() * kSide};
    if (blocked_at(p)) continue;
    if (away_from) {
      const double d = std::hypot(p.x - away_from->x, p.y - away_from->y);
      if (d < min_dist) continue;
    }
    return p;
  }
  throw NumericError("continuous maze: failed to sample a free point");
}

TaskChange ContinuousMaze::begin_episode(int episode_index, Rng& schedule_rng) {
  TaskChange change;
  if (episode_index % episodes_per_task_ == 0) {
    goal_ = sample_free_point(schedule_rng, nullptr, 0.0);
    start_ = sample_free_point(schedule_rng, &goal_, kGoalRadius * 2.0);
    change.changed = true;
  }
  return change;
}

ContinuousMaze::COutcome ContinuousMaze::step(Vec2 pos, int a, Rng& noise_rng) const {
  Vec2 dir{0.0, 0.0};
  switch (a) {
    case kUp: dir.y = -1.0; break;
    case kDown: dir.y = 1.0; break;
    case kLeft: dir.x = -1.0; break;
    case kRight: dir.x = 1.0; break;
    default: throw ConfigError("continuous step: invalid action");
  }
  Vec2 cand{pos.x + kStepLength * dir.x + noise_rng.normal(0.0, noise_sd_),
            pos.y + kStepLength * dir.y + noise_rng.normal(0.0, noise_sd_)};
  COutcome out;
  const bool off_board = cand.x < 0.0 || cand.x > kSide || cand.y < 0.0 || cand.y > kSide;
  out.pos = (off_board || path_blocked(pos, cand)) ? pos : cand;
  const double d = std::hypot(out.pos.x - goal_.x, out.pos.y - goal_.y);
  if (d < kGoalRadius) {
    out.reward = 10.0;
    out.terminal = true;
  }
  return out;
}

Vec ContinuousMaze::rbf(Vec2 pos) const {
  // 10x10 lattice of Gaussian bumps, variance 0.1; peak value 1/(2*pi).
  constexpr double kVar = 0.1;
  constexpr int kGrid = 10;
  const double u = kSide / kGrid;
  Vec phi(kEmbeddingDim);
  for (int r = 0; r < kGrid; ++r) {
    for (int c = 0; c < kGrid; ++c) {
      const double cx = (c + 0.5) * u, cy = (r + 0.5) * u;
      const double d2 = (cx - pos.x) * (cx - pos.x) + (cy - pos.y) * (cy - pos.y);
      phi[r * kGrid + c] = std::exp(-d2 / (2.0 * kVar)) / (2.0 * M_PI * kVar * 10.0);
    }
  }
  return phi;
}

}  // namespace bsr::envs
