#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace bsr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using StateId = int;
using ActionId = int;

inline constexpr int kNumActions = 4;
enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct GridPos {
  int row = 0;
  int col = 0;
};

inline StateId to_state(GridPos p, int side) { return p.row * side + p.col; }
inline GridPos to_pos(StateId s, int side) { return {s / side, s % side}; }

// One experienced step; context is the map sampled when the action was chosen.
struct Transition {
  StateId s = 0;
  ActionId a = 0;
  StateId s_next = 0;
  double r = 0.0;
  int context = 0;
};

inline Vec one_hot(StateId s, int dim) {
  if (s < 0 || s >= dim) {
    throw ConfigError("one_hot: state index " + std::to_string(s) +
                      " out of range for dimension " + std::to_string(dim));
  }
  Vec v = Vec::Zero(dim);
  v[s] = 1.0;
  return v;
}

}  // namespace bsr
