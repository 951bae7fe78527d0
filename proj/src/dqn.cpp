#include "paug/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace paug {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double EpsilonSchedule::value(long step) const {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return start + (end - start) * frac;
}

void MlpConfig::validate() const {
  if (input_width == 0 || hidden_width == 0 || output_width == 0 ||
      replay_capacity == 0 || batch_size == 0 || target_sync_period <= 0 ||
      !(learning_rate > 0.0)) {
    throw std::invalid_argument("dqn: network configuration must be positive");
  }
}

Mlp::Mlp(std::size_t input, std::size_t hidden, std::size_t output, Rng& rng)
    : w1(hidden, input), b1(VectorXd::Zero(hidden)), w2(output, hidden),
      b2(VectorXd::Zero(output)) {
  // Uniform fan-in initialization.
  const double s1 = 1.0 / std::sqrt(static_cast<double>(input));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index k = 0; k < w1.size(); ++k) w1.data()[k] = rng.uniform(-s1, s1);
  for (Eigen::Index k = 0; k < w2.size(); ++k) w2.data()[k] = rng.uniform(-s2, s2);
}

VectorXd Mlp::forward(std::span<const double> input) const {
  const Eigen::Map<const VectorXd> x(input.data(),
                                     static_cast<Eigen::Index>(input.size()));
  const VectorXd h = (w1 * x + b1).cwiseMax(0.0);
  return w2 * h + b2;
}

MatrixXd Mlp::forward_batch(const MatrixXd& inputs) const {
  const MatrixXd h = ((inputs * w1.transpose()).rowwise() + b1.transpose())
                         .cwiseMax(0.0);
  return (h * w2.transpose()).rowwise() + b2.transpose();
}

std::vector<double*> Mlp::parameters() {
  std::vector<double*> p;
  p.reserve(static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size()));
  for (auto* m : {&w1, &w2}) {
    for (Eigen::Index k = 0; k < m->size(); ++k) p.push_back(m->data() + k);
  }
  for (auto* v : {&b1, &b2}) {
    for (Eigen::Index k = 0; k < v->size(); ++k) p.push_back(v->data() + k);
  }
  return p;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be > 0");
  items_.reserve(capacity);
}

void ReplayBuffer::push(const Experience& e) {
  if (items_.size() < capacity_) {
    items_.push_back(e);
    return;
  }
  items_[head_] = e;
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw std::out_of_range("replay index");
  return items_[(head_ + i) % items_.size()];
}

std::vector<Experience> ReplayBuffer::sample(std::size_t count, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("sampling an empty replay buffer");
  std::vector<Experience> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(items_[rng.index(items_.size())]);
  }
  return out;
}

namespace {

MatrixXd stack(std::span<const Experience> batch, bool next) {
  const auto dim = static_cast<Eigen::Index>(batch.front().dim);
  MatrixXd x(static_cast<Eigen::Index>(batch.size()), dim);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& src = next ? batch[b].next_observation : batch[b].observation;
    for (Eigen::Index d = 0; d < dim; ++d) x(static_cast<Eigen::Index>(b), d) = src[d];
  }
  return x;
}

}  // namespace

double td_loss(const Mlp& online, const Mlp& target,
               std::span<const Experience> batch, double gamma,
               MlpGradient* gradient) {
  if (batch.empty()) return 0.0;
  const MatrixXd x = stack(batch, false);
  const MatrixXd next_q = target.forward_batch(stack(batch, true));

  const MatrixXd pre = (x * online.w1.transpose()).rowwise() + online.b1.transpose();
  const MatrixXd h = pre.cwiseMax(0.0);
  const MatrixXd q = (h * online.w2.transpose()).rowwise() + online.b2.transpose();

  const auto n = static_cast<double>(batch.size());
  // dL/dQ: non-zero only on the taken action of each sample.
  MatrixXd dq = MatrixXd::Zero(q.rows(), q.cols());
  double loss = 0.0;
  for (Eigen::Index b = 0; b < q.rows(); ++b) {
    const Experience& e = batch[static_cast<std::size_t>(b)];
    const double bootstrap = e.done ? 0.0 : gamma * next_q.row(b).maxCoeff();
    const double delta = q(b, static_cast<Eigen::Index>(e.action)) -
                         (e.reward + bootstrap);
    loss += 0.5 * delta * delta;
    dq(b, static_cast<Eigen::Index>(e.action)) = delta / n;
  }
  loss /= n;

  if (gradient) {
    gradient->w2 = dq.transpose() * h;
    gradient->b2 = dq.colwise().sum().transpose();
    const MatrixXd dh =
        (dq * online.w2).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    gradient->w1 = dh.transpose() * x;
    gradient->b1 = dh.colwise().sum().transpose();
  }
  return loss;
}

void Adam::step(Mlp& net, const MlpGradient& g) {
  std::vector<double*> params = net.parameters();
  std::vector<double> grads;
  grads.reserve(params.size());
  for (const auto* m : {&g.w1, &g.w2}) grads.insert(grads.end(), m->data(), m->data() + m->size());
  for (const auto* v : {&g.b1, &g.b2}) grads.insert(grads.end(), v->data(), v->data() + v->size());
  if (grads.size() != params.size()) throw std::invalid_argument("adam: gradient shape");
  if (m_.empty()) {
    m_.assign(params.size(), 0.0);
    v_.assign(params.size(), 0.0);
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
    *params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

}  // namespace paug
