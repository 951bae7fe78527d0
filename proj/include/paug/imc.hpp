#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "paug/discretize.hpp"
#include "paug/masked_matrix.hpp"
#include "paug/rng.hpp"

namespace paug {

// Inductive matrix completion with temporal regularization.
//
// The value matrix is modelled as Q ~ X W Y^T with W = U V^T, U (m x r) and
// V (n x r). The cost is
//
//   J = || P_Omega(Q - X U V^T Y^T) ||_F^2
//       + lambda_u (r - tr(U U^T U0 U0^T)) + lambda_v (r - tr(V V^T V0 V0^T))
//
// where (U0, V0) is the anchor, i.e. the factors accepted by the previous
// solve (zeros on the first solve). U and V are refined by alternating
// elementwise multiplicative updates
//
//   U <- U .* (X^T Q Y V) ./ (D_u - lambda_u U0 U0^T U)
//   V <- V .* (Y^T Q^T X U) ./ (D_v - lambda_v V0 V0^T V)
//
// with Q zero-filled off Omega. ResidualMode picks the data-term denominator:
//   kZeroFill  D_u = X^T X U V^T Y^T Y V        (unobserved entries act as 0)
//   kMasked    D_u = X^T P_Omega(X U V^T Y^T) Y V
// Both coincide when Omega covers the whole matrix.

struct FactorPair {
  Eigen::MatrixXd u;  // m x r
  Eigen::MatrixXd v;  // n x r

  std::size_t rank() const { return static_cast<std::size_t>(u.cols()); }

  static FactorPair zeros(std::size_t m, std::size_t n, std::size_t r) {
    return {Eigen::MatrixXd::Zero(m, r), Eigen::MatrixXd::Zero(n, r)};
  }
};

enum class ResidualMode { kMasked, kZeroFill };

struct ImcConfig {
  double lambda_u = 1.0;
  double lambda_v = 1.0;
  std::size_t rank = 0;  // 0 selects min(m, n)
  int max_iterations = 500;
  double tolerance = 1e-6;          // on the relative change of J
  double denominator_guard = 1e-8;  // |denominator| floor, sign preserved
  ResidualMode residual = ResidualMode::kMasked;
  // Equalize the column norms of U and V after each sweep. W is unchanged.
  bool rebalance = true;
  bool record_trace = false;

  void validate() const;
  std::size_t resolved_rank(std::size_t m, std::size_t n) const;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double distance_u = 0.0;  // projection distance of U to the anchor
  double distance_v = 0.0;
};

struct AugmentedQ {
  Eigen::MatrixXd q_hat;  // X U V^T Y^T
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  std::vector<IterationRecord> trace;
};

struct SolveResult {
  AugmentedQ augmented;
  FactorPair factors;
};

// Raised when an update or the cost produces NaN or infinity.
class SolverDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double cost_j(const MaskedMatrix& q, const SideInfo& side,
              const FactorPair& factors, const FactorPair& anchor,
              double lambda_u, double lambda_v);

Eigen::MatrixXd update_u(const MaskedMatrix& q, const SideInfo& side,
                         const FactorPair& factors, const FactorPair& anchor,
                         double lambda_u, double denominator_guard,
                         ResidualMode mode = ResidualMode::kZeroFill);

Eigen::MatrixXd update_v(const MaskedMatrix& q, const SideInfo& side,
                         const FactorPair& factors, const FactorPair& anchor,
                         double lambda_v, double denominator_guard,
                         ResidualMode mode = ResidualMode::kZeroFill);

// r - tr(A A^T B B^T). Equals the sum of squared sines of the principal
// angles when both arguments have orthonormal columns.
double projection_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

Eigen::MatrixXd reconstruct(const SideInfo& side, const FactorPair& factors);

void rebalance(FactorPair& factors);

// Runs the alternating updates. Without `previous` the factors start i.i.d.
// uniform on (0, 1) and the anchor is zero; otherwise `previous` is both the
// warm start and the anchor. Returns the lowest-cost iterate seen.
// Throws std::invalid_argument for an empty Omega and SolverDivergence on
// non-finite values.
SolveResult solve(const MaskedMatrix& q, const SideInfo& side,
                  const std::optional<FactorPair>& previous,
                  const ImcConfig& config, Rng& rng);

}  // namespace paug
