#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "paug/envs.hpp"

namespace paug {

// One grid dimension: half-open bins [lower + k*width, lower + (k+1)*width),
// with the upper edge folded into the last bin.
struct Axis {
  double lower = 0.0;
  double upper = 1.0;
  double width = 1.0;

  std::size_t bins() const;
};

class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::vector<Axis> axes);

  std::size_t dims() const { return axes_.size(); }
  std::size_t size() const { return size_; }  // total states M
  const Axis& axis(std::size_t d) const { return axes_[d]; }
  std::size_t bins(std::size_t d) const { return bins_[d]; }
  std::size_t stride(std::size_t d) const { return strides_[d]; }
  const std::vector<Axis>& axes() const { return axes_; }

 private:
  std::vector<Axis> axes_;
  std::vector<std::size_t> bins_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Position 0.1 x velocity 0.01 grid, 18 x 14 = 252 states.
GridSpec mountain_car_grid();
// 8 bins per dimension over cart position [-2.4, 2.4], cart velocity [-3, 3],
// pole angle [-12 deg, 12 deg], angular velocity [-3, 3]; 4096 states.
GridSpec cart_pole_grid();
GridSpec default_grid(EnvId env);

// "lower:upper:width,lower:upper:width,..."
GridSpec parse_grid(std::string_view text);
std::string format_grid(const GridSpec& grid);

// Row-major (last dimension contiguous) state index; each coordinate is
// clamped into its axis range first. Throws on dimension mismatch.
std::size_t state_index(std::span<const double> observation,
                        const GridSpec& grid);

// Bin label of a state: lower + index * width per dimension.
std::vector<double> bin_center(std::size_t index, const GridSpec& grid);

// X (M x m): row s holds bin_center(s).
Eigen::MatrixXd build_state_features(const GridSpec& grid);

// Y (N x n). CartPole: [-10, 10]^T. MountainCar: [-10, 0, 10]^T + epsilon,
// epsilon keeps every row non-zero and must not be 0.
Eigen::MatrixXd build_action_features(EnvId env, double epsilon = 1.0);

struct SideInfo {
  Eigen::MatrixXd x;  // state features, M x m
  Eigen::MatrixXd y;  // action features, N x n

  std::size_t state_dim() const { return static_cast<std::size_t>(x.cols()); }
  std::size_t action_dim() const { return static_cast<std::size_t>(y.cols()); }
};

SideInfo make_side_info(EnvId env, const GridSpec& grid,
                        double action_epsilon = 1.0);

}  // namespace paug
