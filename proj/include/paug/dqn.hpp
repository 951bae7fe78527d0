#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "paug/rng.hpp"

namespace paug {

// Linear annealing from `start` to `end` over `decay_steps`, then constant.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  long decay_steps = 50'000;

  double value(long step) const;
};

struct MlpConfig {
  std::size_t input_width = 4;
  std::size_t hidden_width = 64;
  std::size_t output_width = 2;
  double learning_rate = 1e-3;
  std::size_t replay_capacity = 10'000;
  std::size_t batch_size = 32;
  long target_sync_period = 500;
  std::size_t warmup = 500;  // transitions stored before training starts
  double gamma = 0.99;
  EpsilonSchedule epsilon;

  void validate() const;
};

struct MlpGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

// input -> ReLU(W1 x + b1) -> W2 h + b2
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng);

  Eigen::VectorXd forward(std::span<const double> input) const;
  // One sample per row.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  std::size_t input_width() const { return static_cast<std::size_t>(w1.cols()); }
  std::size_t output_width() const { return static_cast<std::size_t>(w2.rows()); }

  // Flat view over every weight and bias, used by optimizers and tests.
  std::vector<double*> parameters();

  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;
};

struct Experience {
  std::array<double, 4> observation{};
  std::array<double, 4> next_observation{};
  std::size_t dim = 0;
  std::size_t action = 0;
  double reward = 0.0;
  bool done = false;
};

// Fixed-capacity ring; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(const Experience& e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest stored entry.
  const Experience& at(std::size_t i) const;
  std::vector<Experience> sample(std::size_t count, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // next write position once full
  std::vector<Experience> items_;
};

// Mean over the batch of 0.5 * (Q(s, a) - y)^2, y = r + gamma (1 - done)
// max_a' Q_target(s', a'). Fills `gradient` (w.r.t. `online`) when given.
double td_loss(const Mlp& online, const Mlp& target,
               std::span<const Experience> batch, double gamma,
               MlpGradient* gradient = nullptr);

class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(Mlp& net, const MlpGradient& gradient);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace paug
