#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "loglap/errors.hpp"
#include "loglap/spectral_grid.hpp"

namespace loglap {

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

enum class KernelFamily { gaussian, laplace, box };

/// Normalized densities times `scale`, so the analytic L1 norm is |scale|:
///   gaussian(width s):    exp(-x^2/(2 s^2)) / sqrt(2 pi s^2)
///   laplace(rate a):      (a/2) exp(-a |x|)
///   box(halfwidth h):     1/(2h) on [-h, h]
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double parameter = 1.0;
  double scale = 1.0;

  static KernelSpec gaussian(double width, double scale = 1.0) { return make(KernelFamily::gaussian, width, scale); }
  static KernelSpec laplace(double rate, double scale = 1.0) { return make(KernelFamily::laplace, rate, scale); }
  static KernelSpec box(double halfwidth, double scale = 1.0) { return make(KernelFamily::box, halfwidth, scale); }

  static KernelSpec make(KernelFamily family, double parameter, double scale) {
    if (!(parameter > 0.0) || !std::isfinite(parameter)) {
      throw ValidationError("kernel parameter must be positive and finite");
    }
    if (scale == 0.0 || !std::isfinite(scale)) {
      throw DegenerateModel("kernel must not vanish identically (scale == 0)");
    }
    return {family, parameter, scale};
  }

  double l1_norm() const noexcept { return std::abs(scale); }

  double operator()(double x) const {
    switch (family) {
      case KernelFamily::gaussian:
        return scale * std::exp(-x * x / (2.0 * parameter * parameter)) /
               std::sqrt(2.0 * std::numbers::pi * parameter * parameter);
      case KernelFamily::laplace:
        return scale * 0.5 * parameter * std::exp(-parameter * std::abs(x));
      case KernelFamily::box:
        return std::abs(x) <= parameter ? scale / (2.0 * parameter) : 0.0;
    }
    return 0.0;
  }

  /// Mean of the kernel over [lo, hi] (exact for laplace and box).
  double cell_average(double lo, double hi) const {
    switch (family) {
      case KernelFamily::laplace: {
        // antiderivative of (a/2) e^{-a|y|}: sign(y) (1 - e^{-a|y|}) / 2
        auto F = [a = parameter](double y) {
          const double m = -std::expm1(-a * std::abs(y)) * 0.5;
          return y < 0.0 ? -m : m;
        };
        return scale * (F(hi) - F(lo)) / (hi - lo);
      }
      case KernelFamily::box: {
        const double overlap = std::max(0.0, std::min(hi, parameter) - std::max(lo, -parameter));
        return scale * overlap / (2.0 * parameter) / (hi - lo);
      }
      case KernelFamily::gaussian: {
        auto F = [s = parameter](double y) { return 0.5 * std::erf(y / (s * std::numbers::sqrt2)); };
        return scale * (F(hi) - F(lo)) / (hi - lo);
      }
    }
    return 0.0;
  }
};

inline std::string_view family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::laplace: return "laplace";
    case KernelFamily::box: return "box";
  }
  return "?";
}

/// Samples a kernel on the grid nodes. The smooth gaussian is sampled
/// pointwise; laplace (kink at 0) and box (jumps) use exact cell averages over
/// [x_j - dx/2, x_j + dx/2] so that the discrete L1 norm equals the analytic
/// one up to the tail mass outside the box.
inline GridFunction sample(const KernelSpec& k, const SpectralGrid& grid) {
  if (k.family == KernelFamily::gaussian) return GridFunction::sample(grid, k);
  const double h = 0.5 * grid.dx();
  return GridFunction::sample(grid, [&](double x) { return k.cell_average(x - h, x + h); });
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

enum class NonlinearityFamily { scaled_sine, rational, tanh, custom };

/// g with g(0) = 0 and |g'| <= M.
///   scaled_sine: beta sin z          M = beta
///   rational:    beta z / (1 + z^2)  M = beta   (|g'| peaks at z = 0)
///   tanh:        beta tanh z         M = beta
struct NonlinearitySpec {
  NonlinearityFamily family = NonlinearityFamily::scaled_sine;
  double beta = 1.0;
  double M = 1.0;
  std::function<double(double)> custom_g;
  std::function<double(double)> custom_dg;

  static NonlinearitySpec scaled_sine(double beta) { return make(NonlinearityFamily::scaled_sine, beta); }
  static NonlinearitySpec rational(double beta) { return make(NonlinearityFamily::rational, beta); }
  static NonlinearitySpec tanh(double beta) { return make(NonlinearityFamily::tanh, beta); }

  static NonlinearitySpec make(NonlinearityFamily family, double beta) {
    if (family == NonlinearityFamily::custom) throw ValidationError("use NonlinearitySpec::custom");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("nonlinearity beta must be positive");
    NonlinearitySpec s;
    s.family = family;
    s.beta = beta;
    s.M = beta;
    return s;
  }

  static NonlinearitySpec custom(std::function<double(double)> g, std::function<double(double)> dg, double M);

  double operator()(double z) const {
    switch (family) {
      case NonlinearityFamily::scaled_sine: return beta * std::sin(z);
      case NonlinearityFamily::rational: return beta * z / (1.0 + z * z);
      case NonlinearityFamily::tanh: return beta * std::tanh(z);
      case NonlinearityFamily::custom: return custom_g(z);
    }
    return 0.0;
  }

  double derivative(double z) const {
    switch (family) {
      case NonlinearityFamily::scaled_sine: return beta * std::cos(z);
      case NonlinearityFamily::rational: {
        const double q = 1.0 + z * z;
        return beta * (1.0 - z * z) / (q * q);
      }
      case NonlinearityFamily::tanh: {
        const double c = std::cosh(z);
        return beta / (c * c);
      }
      case NonlinearityFamily::custom: return custom_dg(z);
    }
    return 0.0;
  }
};

inline std::string_view family_name(NonlinearityFamily f) {
  switch (f) {
    case NonlinearityFamily::scaled_sine: return "scaled_sine";
    case NonlinearityFamily::rational: return "rational";
    case NonlinearityFamily::tanh: return "tanh";
    case NonlinearityFamily::custom: return "custom";
  }
  return "?";
}

/// max |g'(z)| over n equally spaced points of [lo, hi].
inline double sampled_derivative_sup(const NonlinearitySpec& g, double lo = -50.0, double hi = 50.0,
                                     std::size_t n = 100'001) {
  double best = 0.0;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) best = std::max(best, std::abs(g.derivative(lo + h * static_cast<double>(i))));
  return best;
}

/// Analytic sup |g'|.
inline double lipschitz_bound(const NonlinearitySpec& g) { return g.M; }

inline NonlinearitySpec NonlinearitySpec::custom(std::function<double(double)> g,
                                                 std::function<double(double)> dg, double M) {
  if (!g || !dg) throw ValidationError("custom nonlinearity requires g and g'");
  if (!(M > 0.0) || !std::isfinite(M)) throw ValidationError("custom nonlinearity requires M > 0");
  if (g(0.0) != 0.0) throw ValidationError("custom nonlinearity must satisfy g(0) = 0");
  NonlinearitySpec s;
  s.family = NonlinearityFamily::custom;
  s.beta = 0.0;
  s.M = M;
  s.custom_g = std::move(g);
  s.custom_dg = std::move(dg);
  const double seen = sampled_derivative_sup(s);
  if (seen > M) {
    throw ValidationError("custom nonlinearity: sampled |g'| = " + format_g17(seen) + " exceeds the declared M");
  }
  return s;
}

/// Pointwise g applied to the real part of u.
inline GridFunction apply_nonlinearity(const NonlinearitySpec& g, const GridFunction& u) {
  return u.map([&g](const cplx& z) { return cplx(g(z.real()), 0.0); });
}

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

enum class SourceFamily { gaussian_bump, difference_of_gaussians };

///   gaussian_bump:           A exp(-(x-c)^2 / (2 w1^2))
///   difference_of_gaussians: A [exp(-(x-c)^2/(2 w1^2)) - (w1/w2) exp(-(x-c)^2/(2 w2^2))]
/// The second family has zero mean.
struct SourceSpec {
  SourceFamily family = SourceFamily::gaussian_bump;
  double center = 0.0;
  double width = 1.0;
  double width2 = 2.0;
  double amplitude = 1.0;

  static SourceSpec gaussian_bump(double center, double width, double amplitude) {
    SourceSpec s{SourceFamily::gaussian_bump, center, width, 0.0, amplitude};
    s.validate();
    return s;
  }
  static SourceSpec difference_of_gaussians(double center, double width1, double width2, double amplitude) {
    SourceSpec s{SourceFamily::difference_of_gaussians, center, width1, width2, amplitude};
    s.validate();
    return s;
  }

  void validate() const {
    if (amplitude == 0.0 || !std::isfinite(amplitude)) throw ValidationError("source amplitude must be nonzero");
    if (!(width > 0.0)) throw ValidationError("source width must be positive");
    if (family == SourceFamily::difference_of_gaussians && (!(width2 > 0.0) || width2 == width)) {
      throw ValidationError("difference_of_gaussians needs a second positive width distinct from the first");
    }
  }

  double operator()(double x) const {
    const double d = x - center;
    const double g1 = std::exp(-d * d / (2.0 * width * width));
    if (family == SourceFamily::gaussian_bump) return amplitude * g1;
    return amplitude * (g1 - (width / width2) * std::exp(-d * d / (2.0 * width2 * width2)));
  }
};

inline std::string_view family_name(SourceFamily f) {
  return f == SourceFamily::gaussian_bump ? "gaussian_bump" : "difference_of_gaussians";
}

inline GridFunction sample(const SourceSpec& s, const SpectralGrid& grid) { return GridFunction::sample(grid, s); }

// ---------------------------------------------------------------------------

struct ModelSpec {
  SourceSpec source;
  KernelSpec kernel;
  NonlinearitySpec nonlinearity;
  double epsilon = 0.0;
  double rho = 1.0;

  void validate() const {
    source.validate();
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ValidationError("model.epsilon must be >= 0");
    if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("model.rho must lie in (0, 1]");
  }
};

}  // namespace loglap
