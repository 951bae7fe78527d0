#include "paug/qcore.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace paug {

void QParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1]");
  }
  // gamma = 0 is accepted for myopic test setups.
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in [0, 1)");
  }
}

QTable::QTable(std::size_t states, std::size_t actions, QParams params)
    : params_(params),
      q_(Eigen::MatrixXd::Zero(states, actions)),
      counts_(CountMatrix::Zero(states, actions)) {
  params_.validate();
}

void QTable::update(const IndexedTransition& t) {
  if (t.state >= states() || t.next_state >= states() ||
      t.action >= actions()) {
    throw std::out_of_range("transition index outside the Q table");
  }
  const double bootstrap = t.done ? 0.0 : params_.gamma * max_value(t.next_state);
  double& q = q_(t.state, t.action);
  q += params_.alpha * (t.reward + bootstrap - q);
  if (counts_(t.state, t.action)++ == 0) ++observed_count_;
}

NormalizedQ QTable::normalize() const {
  NormalizedQ out{Eigen::MatrixXd::Zero(q_.rows(), q_.cols()),
                  Eigen::MatrixXd::Zero(q_.rows(), q_.cols())};
  for (Eigen::Index j = 0; j < q_.cols(); ++j) {
    for (Eigen::Index i = 0; i < q_.rows(); ++i) {
      if (const auto n = counts_(i, j); n > 0) {
        out.values(i, j) = q_(i, j) / static_cast<double>(n);
        out.mask(i, j) = 1.0;
      }
    }
  }
  return out;
}

ObservedFraction QTable::observed_fraction(std::size_t state_features,
                                           std::size_t action_features) const {
  ObservedFraction f;
  const auto total = static_cast<double>(q_.size());
  f.fraction = total > 0 ? static_cast<double>(observed_count_) / total : 0.0;
  const double nm = static_cast<double>(state_features * action_features);
  const double threshold = nm > 0 ? nm * std::log(nm) : 0.0;
  f.identifiable = static_cast<double>(observed_count_) >= threshold;
  return f;
}

void QTable::reset() {
  q_.setZero();
  counts_.setZero();
  observed_count_ = 0;
}

void QTable::write(std::ostream& out) const {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g %.17g", params_.alpha, params_.gamma);
  out << "qtable " << states() << ' ' << actions() << ' ' << buf << '\n';
  for (Eigen::Index i = 0; i < q_.rows(); ++i) {
    for (Eigen::Index j = 0; j < q_.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", q_(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
  for (Eigen::Index i = 0; i < counts_.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts_.cols(); ++j) {
      out << (j ? " " : "") << counts_(i, j);
    }
    out << '\n';
  }
}

QTable QTable::read(std::istream& in) {
  std::string tag;
  std::size_t m = 0, n = 0;
  QParams p;
  if (!(in >> tag >> m >> n >> p.alpha >> p.gamma) || tag != "qtable") {
    throw std::runtime_error("malformed qtable header");
  }
  QTable t(m, n, p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(in >> t.q_(i, j))) throw std::runtime_error("truncated qtable values");
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(in >> t.counts_(i, j))) {
        throw std::runtime_error("truncated qtable counts");
      }
      if (t.counts_(i, j) > 0) {
        ++t.observed_count_;
      } else if (t.q_(i, j) != 0.0) {
        throw std::runtime_error("qtable has a value on an unvisited entry");
      }
    }
  }
  return t;
}

std::size_t argmax_row(const Eigen::MatrixXd& m, std::size_t s) {
  std::size_t best = 0;
  for (Eigen::Index a = 1; a < m.cols(); ++a) {
    if (m(s, a) > m(s, best)) best = static_cast<std::size_t>(a);
  }
  return best;
}

}  // namespace paug
