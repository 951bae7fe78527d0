#include "paug/imc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace paug {

using Eigen::MatrixXd;

void ImcConfig::validate() const {
  if (!(lambda_u >= 0.0) || !(lambda_v >= 0.0)) {
    throw std::invalid_argument("lambda must be non-negative");
  }
  if (max_iterations < 1) throw std::invalid_argument("max iterations < 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be > 0");
  if (!(denominator_guard > 0.0)) {
    throw std::invalid_argument("denominator guard must be > 0");
  }
}

std::size_t ImcConfig::resolved_rank(std::size_t m, std::size_t n) const {
  const std::size_t cap = std::min(m, n);
  const std::size_t r = rank == 0 ? cap : rank;
  if (r > cap) {
    throw std::invalid_argument("rank " + std::to_string(r) +
                                " exceeds min(m, n) = " + std::to_string(cap));
  }
  return r;
}

namespace {

void check_shapes(const MaskedMatrix& q, const SideInfo& side,
                  const FactorPair& f, const FactorPair& anchor) {
  const auto m = side.x.cols(), n = side.y.cols();
  const bool ok = q.values.rows() == side.x.rows() &&
                  q.values.cols() == side.y.rows() &&
                  q.mask.rows() == q.values.rows() &&
                  q.mask.cols() == q.values.cols() && f.u.rows() == m &&
                  f.v.rows() == n && f.u.cols() == f.v.cols() &&
                  anchor.u.rows() == f.u.rows() &&
                  anchor.u.cols() == f.u.cols() &&
                  anchor.v.rows() == f.v.rows() &&
                  anchor.v.cols() == f.v.cols();
  if (!ok) throw std::invalid_argument("imc: inconsistent matrix dimensions");
}

double guarded(double d, double eps) {
  if (std::abs(d) >= eps) return d;
  return d < 0.0 ? -eps : eps;
}

MatrixXd multiplicative_step(const MatrixXd& current, const MatrixXd& numerator,
                             const MatrixXd& denominator, double eps,
                             const char* name) {
  MatrixXd next(current.rows(), current.cols());
  for (Eigen::Index j = 0; j < current.cols(); ++j) {
    for (Eigen::Index i = 0; i < current.rows(); ++i) {
      const double value =
          current(i, j) * (numerator(i, j) / guarded(denominator(i, j), eps));
      if (!std::isfinite(value)) {
        throw SolverDivergence(std::string("imc: ") + name + "(" +
                               std::to_string(i) + "," + std::to_string(j) +
                               ") became " + std::to_string(value));
      }
      next(i, j) = value;
    }
  }
  return next;
}

}  // namespace

MatrixXd reconstruct(const SideInfo& side, const FactorPair& f) {
  return (side.x * f.u) * (side.y * f.v).transpose();
}

double projection_distance(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("projection distance: shape mismatch");
  }
  // tr(A A^T B B^T) = ||A^T B||_F^2
  return static_cast<double>(a.cols()) - (a.transpose() * b).squaredNorm();
}

double cost_j(const MaskedMatrix& q, const SideInfo& side, const FactorPair& f,
              const FactorPair& anchor, double lambda_u, double lambda_v) {
  check_shapes(q, side, f, anchor);
  const MatrixXd residual =
      (q.values - reconstruct(side, f)).cwiseProduct(q.mask);
  return residual.squaredNorm() +
         lambda_u * projection_distance(f.u, anchor.u) +
         lambda_v * projection_distance(f.v, anchor.v);
}

MatrixXd update_u(const MaskedMatrix& q, const SideInfo& side,
                  const FactorPair& f, const FactorPair& anchor,
                  double lambda_u, double eps, ResidualMode mode) {
  check_shapes(q, side, f, anchor);
  const MatrixXd& x = side.x;
  const MatrixXd& y = side.y;
  const MatrixXd yv = y * f.v;
  const MatrixXd numerator = x.transpose() * (q.values * yv);
  MatrixXd data;
  if (mode == ResidualMode::kZeroFill) {
    data = (x.transpose() * x) * f.u * (yv.transpose() * yv);
  } else {
    const MatrixXd fit = ((x * f.u) * yv.transpose()).cwiseProduct(q.mask);
    data = x.transpose() * (fit * yv);
  }
  const MatrixXd denominator =
      data - lambda_u * anchor.u * (anchor.u.transpose() * f.u);
  return multiplicative_step(f.u, numerator, denominator, eps, "U");
}

MatrixXd update_v(const MaskedMatrix& q, const SideInfo& side,
                  const FactorPair& f, const FactorPair& anchor,
                  double lambda_v, double eps, ResidualMode mode) {
  check_shapes(q, side, f, anchor);
  const MatrixXd& x = side.x;
  const MatrixXd& y = side.y;
  const MatrixXd xu = x * f.u;
  const MatrixXd numerator = y.transpose() * (q.values.transpose() * xu);
  MatrixXd data;
  if (mode == ResidualMode::kZeroFill) {
    data = (y.transpose() * y) * f.v * (xu.transpose() * xu);
  } else {
    const MatrixXd fit = (xu * (y * f.v).transpose()).cwiseProduct(q.mask);
    data = y.transpose() * (fit.transpose() * xu);
  }
  const MatrixXd denominator =
      data - lambda_v * anchor.v * (anchor.v.transpose() * f.v);
  return multiplicative_step(f.v, numerator, denominator, eps, "V");
}

void rebalance(FactorPair& f) {
  for (Eigen::Index j = 0; j < f.u.cols(); ++j) {
    const double nu = f.u.col(j).norm();
    const double nv = f.v.col(j).norm();
    if (nu > 0.0 && nv > 0.0) {
      const double c = std::sqrt(nv / nu);
      f.u.col(j) *= c;
      f.v.col(j) /= c;
    }
  }
}

SolveResult solve(const MaskedMatrix& q, const SideInfo& side,
                  const std::optional<FactorPair>& previous,
                  const ImcConfig& config, Rng& rng) {
  config.validate();
  if (q.observed_count() == 0) {
    throw std::invalid_argument("imc solve needs at least one observed entry");
  }
  const auto m = static_cast<std::size_t>(side.x.cols());
  const auto n = static_cast<std::size_t>(side.y.cols());

  FactorPair anchor;
  FactorPair f;
  if (previous) {
    anchor = *previous;
    f = *previous;
  } else {
    const std::size_t r = config.resolved_rank(m, n);
    anchor = FactorPair::zeros(m, n, r);
    f = FactorPair::zeros(m, n, r);
    // Column-major fill, U then V. Open interval: a zero would be absorbing.
    auto draw = [&rng] {
      double u = 0.0;
      while (u == 0.0) u = rng.uniform();
      return u;
    };
    for (Eigen::Index k = 0; k < f.u.size(); ++k) f.u.data()[k] = draw();
    for (Eigen::Index k = 0; k < f.v.size(); ++k) f.v.data()[k] = draw();
  }
  check_shapes(q, side, f, anchor);

  auto cost = [&](const FactorPair& p) {
    const double j = cost_j(q, side, p, anchor, config.lambda_u, config.lambda_v);
    if (!std::isfinite(j)) throw SolverDivergence("imc: cost became non-finite");
    return j;
  };

  SolveResult out;
  AugmentedQ& aq = out.augmented;
  aq.initial_cost = cost(f);
  double previous_cost = aq.initial_cost;
  double best_cost = aq.initial_cost;
  FactorPair best = f;

  for (int k = 1; k <= config.max_iterations; ++k) {
    f.u = update_u(q, side, f, anchor, config.lambda_u,
                   config.denominator_guard, config.residual);
    f.v = update_v(q, side, f, anchor, config.lambda_v,
                   config.denominator_guard, config.residual);
    if (config.rebalance) rebalance(f);
    const double j = cost(f);
    aq.iterations = k;
    if (config.record_trace) {
      aq.trace.push_back({k, j, projection_distance(f.u, anchor.u),
                          projection_distance(f.v, anchor.v)});
    }
    if (j < best_cost) {
      best_cost = j;
      best = f;
    }
    const double change = std::abs(j - previous_cost) /
                          std::max(std::abs(previous_cost),
                                   config.denominator_guard);
    previous_cost = j;
    if (change < config.tolerance) {
      aq.converged = true;
      break;
    }
  }

  aq.final_cost = best_cost;
  aq.q_hat = reconstruct(side, best);
  out.factors = std::move(best);
  return out;
}

}  // namespace paug
