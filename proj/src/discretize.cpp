#include "paug/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace paug {

namespace {

// Absorbs representation error when a coordinate sits exactly on a bin edge,
// e.g. (0.5 - (-1.2)) / 0.1 = 16.999999999999996.
constexpr double kEdgeSlack = 1e-9;

}  // namespace

std::size_t Axis::bins() const {
  const double span = (upper - lower) / width;
  return static_cast<std::size_t>(std::ceil(span - kEdgeSlack));
}

GridSpec::GridSpec(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw std::invalid_argument("grid needs a dimension");
  for (const Axis& a : axes_) {
    if (!(a.width > 0.0)) throw std::invalid_argument("bin width must be > 0");
    if (!(a.lower < a.upper)) {
      throw std::invalid_argument("axis lower bound must be below upper");
    }
    bins_.push_back(a.bins());
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size() - 1; d > 0; --d) {
    strides_[d - 1] = strides_[d] * bins_[d];
  }
  size_ = strides_[0] * bins_[0];
}

GridSpec mountain_car_grid() {
  return GridSpec({{mountain_car::kMinPosition, mountain_car::kMaxPosition, 0.1},
                   {-mountain_car::kMaxSpeed, mountain_car::kMaxSpeed, 0.01}});
}

GridSpec cart_pole_grid() {
  const double angle = degrees_to_radians(cart_pole::kAngleLimitDegrees);
  const double pos = cart_pole::kPositionLimit;
  return GridSpec({{-pos, pos, 2.0 * pos / 8.0},
                   {-3.0, 3.0, 0.75},
                   {-angle, angle, 2.0 * angle / 8.0},
                   {-3.0, 3.0, 0.75}});
}

GridSpec default_grid(EnvId env) {
  return env == EnvId::kMountainCar ? mountain_car_grid() : cart_pole_grid();
}

GridSpec parse_grid(std::string_view text) {
  std::vector<Axis> axes;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    Axis a;
    char c1 = 0, c2 = 0;
    std::istringstream field(item);
    if (!(field >> a.lower >> c1 >> a.upper >> c2 >> a.width) || c1 != ':' ||
        c2 != ':') {
      throw std::invalid_argument("bad grid axis: '" + item + "'");
    }
    axes.push_back(a);
  }
  return GridSpec(std::move(axes));
}

std::string format_grid(const GridSpec& grid) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    const Axis& a = grid.axis(d);
    if (d) out << ',';
    out << a.lower << ':' << a.upper << ':' << a.width;
  }
  return out.str();
}

std::size_t state_index(std::span<const double> observation,
                        const GridSpec& grid) {
  if (observation.size() != grid.dims()) {
    throw std::invalid_argument("observation has " +
                                std::to_string(observation.size()) +
                                " dimensions, grid has " +
                                std::to_string(grid.dims()));
  }
  std::size_t index = 0;
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    const Axis& a = grid.axis(d);
    const double v = std::clamp(observation[d], a.lower, a.upper);
    const double k = std::floor((v - a.lower) / a.width + kEdgeSlack);
    const auto bin = std::min(static_cast<std::size_t>(std::max(k, 0.0)),
                              grid.bins(d) - 1);
    index += bin * grid.stride(d);
  }
  return index;
}

std::vector<double> bin_center(std::size_t index, const GridSpec& grid) {
  if (index >= grid.size()) throw std::out_of_range("state index out of range");
  std::vector<double> c(grid.dims());
  for (std::size_t d = 0; d < grid.dims(); ++d) {
    const std::size_t bin = (index / grid.stride(d)) % grid.bins(d);
    c[d] = grid.axis(d).lower + static_cast<double>(bin) * grid.axis(d).width;
  }
  return c;
}

Eigen::MatrixXd build_state_features(const GridSpec& grid) {
  Eigen::MatrixXd x(grid.size(), grid.dims());
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const auto c = bin_center(s, grid);
    for (std::size_t d = 0; d < c.size(); ++d) x(s, d) = c[d];
  }
  return x;
}

Eigen::MatrixXd build_action_features(EnvId env, double epsilon) {
  switch (env) {
    case EnvId::kCartPole: {
      Eigen::MatrixXd y(2, 1);
      y << -10.0, 10.0;
      return y;
    }
    case EnvId::kMountainCar: {
      if (epsilon == 0.0) {
        throw std::invalid_argument(
            "action feature offset must be non-zero (row for 'no push' would "
            "vanish)");
      }
      Eigen::MatrixXd y(3, 1);
      y << -10.0 + epsilon, 0.0 + epsilon, 10.0 + epsilon;
      return y;
    }
  }
  throw std::invalid_argument("unknown env id");
}

SideInfo make_side_info(EnvId env, const GridSpec& grid,
                        double action_epsilon) {
  return {build_state_features(grid),
          build_action_features(env, action_epsilon)};
}

}  // namespace paug
