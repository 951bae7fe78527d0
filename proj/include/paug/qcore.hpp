#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>

#include <Eigen/Dense>

#include "paug/masked_matrix.hpp"

namespace paug {

struct QParams {
  double alpha = 0.1;   // learning rate, (0, 1]
  double gamma = 0.99;  // discount, [0, 1)

  void validate() const;
};

// A transition expressed in discrete state indices.
struct IndexedTransition {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
  bool done = false;
};

using CountMatrix = Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Q / Nq on visited entries, 0 elsewhere, plus the 0/1 observation mask.
using NormalizedQ = MaskedMatrix;

struct ObservedFraction {
  double fraction = 0.0;      // |Omega| / (M N)
  bool identifiable = false;  // |Omega| >= n m ln(n m)
};

// Dense M x N action-value table with visit counts. The observed set is the
// support of the counts, so Q is exactly zero wherever no visit happened.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, std::size_t actions, QParams params = {});

  // One tabular Q-learning step; the bootstrap term is dropped on terminal
  // transitions. Throws std::out_of_range on a bad index.
  void update(const IndexedTransition& t);

  NormalizedQ normalize() const;
  ObservedFraction observed_fraction(std::size_t state_features,
                                     std::size_t action_features) const;

  // Zeros Q, counts and the observed set; keeps alpha and gamma.
  void reset();

  std::size_t states() const { return static_cast<std::size_t>(q_.rows()); }
  std::size_t actions() const { return static_cast<std::size_t>(q_.cols()); }
  const QParams& params() const { return params_; }
  const Eigen::MatrixXd& values() const { return q_; }
  const CountMatrix& counts() const { return counts_; }
  bool observed(std::size_t s, std::size_t a) const { return counts_(s, a) > 0; }
  std::size_t observed_count() const { return observed_count_; }

  double value(std::size_t s, std::size_t a) const { return q_(s, a); }
  double max_value(std::size_t s) const { return q_.row(s).maxCoeff(); }

  // Text dump:
  //   line 1: "qtable <M> <N> <alpha> <gamma>"
  //   next M lines: N values of Q, row-major, %.17g
  //   next M lines: N visit counts, row-major
  void write(std::ostream& out) const;
  static QTable read(std::istream& in);

 private:
  QParams params_;
  Eigen::MatrixXd q_;
  CountMatrix counts_;
  std::size_t observed_count_ = 0;
};

// Lowest index among the maxima of row `s`.
std::size_t argmax_row(const Eigen::MatrixXd& m, std::size_t s);

}  // namespace paug
