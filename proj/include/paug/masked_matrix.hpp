#pragma once

#include <Eigen/Dense>

namespace paug {

// Partially observed matrix: `values` is zero wherever `mask` is zero.
struct MaskedMatrix {
  Eigen::MatrixXd values;
  Eigen::MatrixXd mask;  // 1 on observed entries, 0 elsewhere

  static MaskedMatrix fully_observed(Eigen::MatrixXd values) {
    MaskedMatrix m{std::move(values), {}};
    m.mask = Eigen::MatrixXd::Ones(m.values.rows(), m.values.cols());
    return m;
  }

  // Keeps entries where mask != 0 and zero-fills the rest.
  static MaskedMatrix observe(const Eigen::MatrixXd& full,
                              const Eigen::MatrixXd& mask) {
    return {full.cwiseProduct(mask), mask};
  }

  Eigen::Index observed_count() const {
    return (mask.array() != 0.0).count();
  }
};

}  // namespace paug
