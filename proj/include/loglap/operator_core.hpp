#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>

#include "loglap/errors.hpp"
#include "loglap/golden_section.hpp"

namespace loglap {

using cplx = std::complex<double>;

/// Symbol value at p = 0. Its modulus is infinite and its reciprocal is
/// exactly zero (see reciprocal()).
inline const cplx INF_SYMBOL{std::numeric_limits<double>::infinity(), 0.0};

inline bool is_inf_symbol(const cplx& s) { return std::isinf(s.real()); }

inline cplx reciprocal(const cplx& s) {
  if (is_inf_symbol(s)) return {0.0, 0.0};
  return 1.0 / s;
}

/// lambda_{a,b}(p) = ln(|p|/e^a) - i b p, the Fourier symbol of
/// (1/2) ln(-d^2/dx^2) - b d/dx - a.
inline cplx symbol_lambda(double p, double a, double b) {
  if (p == 0.0) return INF_SYMBOL;
  return {std::log(std::abs(p)) - a, -b * p};
}

/// Modulus of the symbol, sqrt(ln^2(|p|/e^a) + b^2 p^2), via hypot.
inline double symbol_modulus(double p, double a, double b) {
  if (p == 0.0) return std::numeric_limits<double>::infinity();
  return std::hypot(std::log(std::abs(p)) - a, b * p);
}

struct LowerBoundSearch {
  std::size_t scan_points = 4096;
  std::size_t certify_points = 1'000'000;
  double rel_tol = 1e-12;
  double certify_tol = 1e-9;  // relative
};

struct LowerBoundResult {
  double value = 0.0;   // C_{a,b}
  double argmin = 0.0;  // p at which the minimum is attained
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double certified_sample_min = 0.0;  // smallest modulus on the certificate sample
};

/// Search bracket [1e-6 e^a, max(1e2, 10 e^a, 10/|b|)].
inline std::pair<double, double> lower_bound_bracket(double a, double b) {
  const double ea = std::exp(a);
  return {1e-6 * ea, std::max({1e2, 10.0 * ea, 10.0 / std::abs(b)})};
}

/// min_{p>0} |lambda_{a,b}(p)|. Dense log-spaced scan, golden-section
/// refinement in log p around the best scan point, then a certificate pass
/// over search.certify_points log-spaced samples of the bracket.
inline LowerBoundResult compute_lower_bound(double a, double b, const LowerBoundSearch& search = {}) {
  if (b == 0.0 || !std::isfinite(a) || !std::isfinite(b)) {
    throw ValidationError("compute_lower_bound: requires finite a and b != 0");
  }
  const auto [lo, hi] = lower_bound_bracket(a, b);
  const double tlo = std::log(lo), thi = std::log(hi);

  // Squared modulus as a function of t = ln p.
  auto objective = [a, b](double t) {
    const double re = t - a;
    const double p = std::exp(t);
    return re * re + b * b * p * p;
  };

  const std::size_t n = std::max<std::size_t>(search.scan_points, 3);
  const double dt = (thi - tlo) / static_cast<double>(n - 1);
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = objective(tlo + dt * static_cast<double>(i));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  const double t_left = tlo + dt * static_cast<double>(best == 0 ? 0 : best - 1);
  const double t_right = tlo + dt * static_cast<double>(std::min(best + 1, n - 1));
  const auto refined = golden_section_minimize(objective, t_left, t_right, search.rel_tol, 1e-15);

  LowerBoundResult out;
  out.argmin = std::exp(refined.x);
  out.value = symbol_modulus(out.argmin, a, b);
  out.bracket_lo = lo;
  out.bracket_hi = hi;

  const std::size_t m = std::max<std::size_t>(search.certify_points, 2);
  const double dc = (thi - tlo) / static_cast<double>(m - 1);
  double sample_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    sample_min = std::min(sample_min, symbol_modulus(std::exp(tlo + dc * static_cast<double>(i)), a, b));
  }
  out.certified_sample_min = sample_min;
  if (sample_min < out.value * (1.0 - search.certify_tol)) {
    throw BracketFailure("compute_lower_bound: certificate sample undercuts the refined minimum");
  }
  out.value = std::min(out.value, sample_min);
  if (!(out.value > 0.0)) throw BracketFailure("compute_lower_bound: non-positive lower bound");
  return out;
}

/// Operator constants a, b (b != 0) together with the certified lower bound
/// C_{a,b} of |lambda_{a,b}|. Immutable after construction.
class OperatorParams {
public:
  OperatorParams(double a, double b, const LowerBoundSearch& search = {})
      : a_(a), b_(b), bound_(compute_lower_bound(a, b, search)) {}

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double c_ab() const noexcept { return bound_.value; }
  const LowerBoundResult& lower_bound() const noexcept { return bound_; }

  cplx symbol(double p) const { return symbol_lambda(p, a_, b_); }
  double modulus(double p) const { return symbol_modulus(p, a_, b_); }

private:
  double a_;
  double b_;
  LowerBoundResult bound_;
};

/// Largest admissible kernel scaling rho C / (M |K|_1 (|u0|_2 + 1)).
inline double epsilon_max(double rho, double c_ab, double M, double kernel_l1, double u0_l2) {
  if (M == 0.0 || kernel_l1 == 0.0) {
    throw DegenerateModel("epsilon_max: nonlinearity bound M and kernel L1 norm must be nonzero");
  }
  if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("epsilon_max: rho must lie in (0, 1]");
  if (!(c_ab > 0.0) || M < 0.0 || kernel_l1 < 0.0 || u0_l2 < 0.0) {
    throw ValidationError("epsilon_max: c_ab must be positive and the other inputs nonnegative");
  }
  return rho * c_ab / (M * kernel_l1 * (u0_l2 + 1.0));
}

/// Contraction rate eps M |K|_1 / C_{a,b}.
inline double sigma_rate(double epsilon, double M, double kernel_l1, double c_ab) {
  if (!(c_ab > 0.0)) throw ValidationError("sigma_rate: c_ab must be positive");
  if (epsilon < 0.0 || M < 0.0 || kernel_l1 < 0.0) {
    throw ValidationError("sigma_rate: inputs must be nonnegative");
  }
  return epsilon * M * kernel_l1 / c_ab;
}

struct ContractionConstants {
  double epsilon = 0.0;
  double rho = 1.0;
  double M = 0.0;
  double kernel_l1 = 0.0;
  double u0_l2 = 0.0;
  double c_ab = 0.0;
  double sigma = 0.0;
  double epsilon_max = 0.0;

  bool admissible() const noexcept { return epsilon >= 0.0 && epsilon <= epsilon_max; }

  static ContractionConstants make(double epsilon, double rho, double M, double kernel_l1,
                                   double u0_l2, double c_ab) {
    if (epsilon < 0.0 || !std::isfinite(epsilon)) {
      throw ValidationError("epsilon must be finite and nonnegative");
    }
    ContractionConstants k;
    k.epsilon = epsilon;
    k.rho = rho;
    k.M = M;
    k.kernel_l1 = kernel_l1;
    k.u0_l2 = u0_l2;
    k.c_ab = c_ab;
    k.epsilon_max = loglap::epsilon_max(rho, c_ab, M, kernel_l1, u0_l2);
    k.sigma = sigma_rate(epsilon, M, kernel_l1, c_ab);
    return k;
  }
};

}  // namespace loglap
