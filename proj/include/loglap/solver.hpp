#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "loglap/errors.hpp"
#include "loglap/model_library.hpp"
#include "loglap/operator_core.hpp"
#include "loglap/spectral_grid.hpp"

namespace loglap {

class ResidualTooLarge : public Error {
public:
  explicit ResidualTooLarge(const std::string& what)
      : Error("ResidualTooLarge", what, ExitCode::numerical_integrity) {}
};

struct SolverOptions {
  double fp_tol = 1e-10;
  double linear_residual_tol = 1e-8;  // relative to |f|_2
  double decay_tol = 1e-10;           // relative to |f|_inf
  double zero_mode_tol = 1e-10;       // relative to |f^|_2
  double ratio_tol = 1e-6;
  std::size_t max_iters = 10'000;
};

// ---------------------------------------------------------------------------
// Discrete symbol
// ---------------------------------------------------------------------------

/// lambda_{a,b} on the grid frequencies, in transform order.
///
/// Slot 0 (p = 0) carries INF_SYMBOL and a zero reciprocal. The Nyquist slot
/// has no conjugate partner, so the operator acts there with Re lambda to keep
/// real functions real, and the solves treat it like p = 0 (reciprocal 0).
/// "Active" modes are all others.
class DiscreteSymbol {
public:
  DiscreteSymbol(const SpectralGrid& grid, const OperatorParams& params)
      : grid_(grid), lambda_(grid.size()), inv_(grid.size()) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      lambda_[k] = params.symbol(grid.freq(k));
      inv_[k] = active(k) ? reciprocal(lambda_[k]) : cplx{0.0, 0.0};
    }
    lambda_[grid.nyquist_index()] = {lambda_[grid.nyquist_index()].real(), 0.0};
  }

  bool active(std::size_t k) const noexcept { return k != grid_.zero_index() && k != grid_.nyquist_index(); }
  const cplx& lambda(std::size_t k) const { return lambda_[k]; }
  const cplx& inverse(std::size_t k) const { return inv_[k]; }
  const SpectralGrid& grid() const noexcept { return grid_; }

private:
  SpectralGrid grid_;
  std::vector<cplx> lambda_;
  std::vector<cplx> inv_;
};

/// l2 norm (dp weight) of a frequency-side function restricted to active modes.
inline double active_l2(const DiscreteSymbol& sym, const std::vector<cplx>& spectrum) {
  double s = 0.0;
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    if (sym.active(k)) s += std::norm(spectrum[k]);
  }
  return std::sqrt(s * sym.grid().dp());
}

/// Contribution of the p = 0 slot to |F|_2, relative to |F|_2.
inline double zero_mode_fraction(const GridFunction& F) {
  const double total = l2_norm(F);
  if (total == 0.0) return 0.0;
  return std::abs(F[0]) * std::sqrt(F.grid().dp()) / total;
}

// ---------------------------------------------------------------------------
// Operator application and linear solve
// ---------------------------------------------------------------------------

/// L_{a,b} u as the Fourier multiplier lambda_{a,b}. The p = 0 input mode must
/// vanish (within zero_mode_tol) since the symbol is unbounded there.
inline GridFunction apply_operator(const GridFunction& u, const OperatorParams& params,
                                   double zero_mode_tol = 1e-10) {
  const DiscreteSymbol sym(u.grid(), params);
  const auto U = ft_forward(u);
  if (zero_mode_fraction(U) > zero_mode_tol) {
    throw ZeroModePresent("apply_operator: input has a nonzero p = 0 mode");
  }
  std::vector<cplx> out(U.size());
  for (std::size_t k = 1; k < out.size(); ++k) out[k] = sym.lambda(k) * U[k];
  return ft_inverse(GridFunction(u.grid(), Domain::frequency, std::move(out)));
}

struct LinearSolveResult {
  GridFunction u0;
  double residual_l2 = 0.0;           // relative to |f|_2 (0 when f = 0)
  double u0_l2 = 0.0;
  std::vector<std::string> warnings;  // NontrivialZeroMode, decay
};

/// u^ = f^ / lambda on active modes, zero elsewhere.
inline LinearSolveResult solve_linear(const GridFunction& f, const OperatorParams& params,
                                      const SolverOptions& opts = {}) {
  if (f.domain() != Domain::space) throw GridMismatch("solve_linear expects a space-side source");
  for (const auto& z : f.values()) {
    if (!std::isfinite(z.real()) || z.imag() != 0.0) {
      throw ValidationError("solve_linear: source must be real-valued and finite");
    }
  }
  std::vector<std::string> warnings;
  if (const auto d = check_decay(f, opts.decay_tol); !d.ok) {
    warnings.push_back("Decay: |f| at the domain boundary is " + format_g17(d.boundary_magnitude) +
                       ", above decay_tol * |f|_inf = " + format_g17(d.threshold));
  }

  const DiscreteSymbol sym(f.grid(), params);
  const auto F = ft_forward(f);
  if (const double z = zero_mode_fraction(F); z > opts.zero_mode_tol) {
    warnings.push_back("NontrivialZeroMode: the p = 0 mode of f carries " + format_g17(z) +
                       " of |f^|_2 and is dropped by the discrete solve");
  }
  std::vector<cplx> U(F.size());
  for (std::size_t k = 0; k < U.size(); ++k) U[k] = F[k] * sym.inverse(k);
  auto u0 = ft_inverse(GridFunction(f.grid(), Domain::frequency, std::move(U)), Output::real_valued);

  // Residual of L u0 = f on active modes, recomputed from the realified u0.
  const auto U0 = ft_forward(u0);
  std::vector<cplx> r(F.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = sym.lambda(k) * U0[k] - F[k];
  const double fnorm = l2_norm(f);
  const double res = fnorm > 0.0 ? active_l2(sym, r) / fnorm : 0.0;
  if (res > opts.linear_residual_tol) {
    throw ResidualTooLarge("solve_linear: relative residual " + format_g17(res) + " exceeds tolerance");
  }
  const double u0_l2 = l2_norm(u0);
  return {std::move(u0), res, u0_l2, std::move(warnings)};
}

// ---------------------------------------------------------------------------
// Auxiliary map t_g
// ---------------------------------------------------------------------------

/// v -> u solving L u = eps (K * g(u0 + v)), computed as
/// u^ = eps sqrt(2 pi) K^ G^ / lambda with the inactive reciprocals set to 0.
class AuxiliaryMap {
public:
  AuxiliaryMap(const GridFunction& u0, const ModelSpec& model, const OperatorParams& params)
      : u0_(u0), g_(model.nonlinearity), rho_(model.rho), multiplier_(u0.size()) {
    const DiscreteSymbol sym(u0.grid(), params);
    const auto Kh = ft_forward(sample(model.kernel, u0.grid()));
    const double s = model.epsilon * std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < multiplier_.size(); ++k) multiplier_[k] = s * Kh[k] * sym.inverse(k);
  }

  const GridFunction& u0() const noexcept { return u0_; }
  double rho() const noexcept { return rho_; }

  GridFunction operator()(const GridFunction& v) const {
    if (l2_norm(v) > rho_ * (1.0 + 1e-12)) {
      throw BallViolation("apply_t_g: |v|_2 = " + format_g17(l2_norm(v)) + " exceeds rho = " + format_g17(rho_));
    }
    return unchecked(v);
  }

  /// Same map without the ball check (used for residual evaluation).
  GridFunction unchecked(const GridFunction& v) const {
    const auto G = apply_nonlinearity(g_, u0_ + v);
    auto Gh = ft_forward(G);
    std::vector<cplx> out(Gh.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = multiplier_[k] * Gh[k];
    return ft_inverse(GridFunction(v.grid(), Domain::frequency, std::move(out)), Output::real_valued);
  }

private:
  GridFunction u0_;
  NonlinearitySpec g_;
  double rho_;
  std::vector<cplx> multiplier_;
};

inline GridFunction apply_t_g(const GridFunction& v, const GridFunction& u0, const ModelSpec& model,
                              const OperatorParams& params) {
  return AuxiliaryMap(u0, model, params)(v);
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

/// l2 over active modes of L u - f - eps K * g(u).
inline double residual_main(const GridFunction& u, const ModelSpec& model, const OperatorParams& params) {
  const auto& grid = u.grid();
  const DiscreteSymbol sym(grid, params);
  const auto U = ft_forward(u);
  const auto F = ft_forward(sample(model.source, grid));
  const auto Kh = ft_forward(sample(model.kernel, grid));
  const auto Gh = ft_forward(apply_nonlinearity(model.nonlinearity, u));
  const double s = model.epsilon * std::sqrt(2.0 * std::numbers::pi);
  std::vector<cplx> r(U.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = sym.lambda(k) * U[k] - F[k] - s * Kh[k] * Gh[k];
  return active_l2(sym, r);
}

/// l2 over active modes of L u_p - eps K * g(u0 + u_p).
inline double residual_perturbed(const GridFunction& up, const GridFunction& u0, const ModelSpec& model,
                                 const OperatorParams& params) {
  const auto& grid = up.grid();
  const DiscreteSymbol sym(grid, params);
  const auto U = ft_forward(up);
  const auto Kh = ft_forward(sample(model.kernel, grid));
  const auto Gh = ft_forward(apply_nonlinearity(model.nonlinearity, u0 + up));
  const double s = model.epsilon * std::sqrt(2.0 * std::numbers::pi);
  std::vector<cplx> r(U.size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = sym.lambda(k) * U[k] - s * Kh[k] * Gh[k];
  return active_l2(sym, r);
}

// ---------------------------------------------------------------------------
// Fixed point
// ---------------------------------------------------------------------------

struct SolveReport {
  std::size_t iterations = 0;
  std::vector<double> increments;      // |v^{k+1} - v^k|_2
  std::vector<double> observed_ratios; // increments[k+1] / increments[k]
  double sigma_theoretical = 0.0;
  double epsilon = 0.0;
  double epsilon_max = 0.0;
  double c_ab = 0.0;
  double kernel_l1 = 0.0;
  double M = 0.0;
  double u0_l2 = 0.0;
  double up_l2 = 0.0;
  double a_posteriori_bound = 0.0;     // sigma/(1-sigma) * last increment
  double fixed_point_residual = 0.0;   // |u_p - t_g(u_p)|_2
  double perturbed_residual_l2 = 0.0;
  double main_residual_l2 = 0.0;
  double linear_residual = 0.0;
  double ratio_tol = 0.0;
  int threads = 1;
  std::vector<std::string> warnings;

  bool ratios_within_sigma() const {
    return std::all_of(observed_ratios.begin(), observed_ratios.end(),
                       [this](double r) { return r <= sigma_theoretical + ratio_tol; });
  }
};

inline nlohmann::json to_json(const SolveReport& r) {
  return {
      {"iterations", r.iterations},
      {"sigma", r.sigma_theoretical},
      {"increments", r.increments},
      {"ratios", r.observed_ratios},
      {"residual", r.main_residual_l2},
      {"u0_l2", r.u0_l2},
      {"up_l2", r.up_l2},
      {"epsilon", r.epsilon},
      {"epsilon_max", r.epsilon_max},
      {"c_ab", r.c_ab},
      {"kernel_l1", r.kernel_l1},
      {"M", r.M},
      {"a_posteriori_bound", r.a_posteriori_bound},
      {"fixed_point_residual", r.fixed_point_residual},
      {"perturbed_residual", r.perturbed_residual_l2},
      {"linear_residual", r.linear_residual},
      {"threads", r.threads},
      {"warnings", r.warnings},
  };
}

struct FixedPointResult {
  GridFunction u0;
  GridFunction u_p;
  GridFunction u;  // u0 + u_p
  ContractionConstants constants;
  SolveReport report;
};

struct FixedPointOptions : SolverOptions {
  std::optional<GridFunction> initial;  // v^0, defaults to 0
  std::optional<double> M_override;     // use this M in sigma / epsilon_max instead of g's own
};

/// Contraction constants for a model on a grid, including |u0|_2 from the linear solve.
inline ContractionConstants contraction_constants(const ModelSpec& model, const OperatorParams& params,
                                                  double u0_l2, std::optional<double> M_override = {}) {
  const double M = M_override.value_or(lipschitz_bound(model.nonlinearity));
  return ContractionConstants::make(model.epsilon, model.rho, M, model.kernel.l1_norm(), u0_l2, params.c_ab());
}

/// Picard iteration v^{k+1} = t_g(v^k) from v^0 = 0 (or opts.initial), stopped
/// when |v^{k+1} - v^k|_2 <= fp_tol (1 - sigma) / sigma. Refuses eps > eps_max.
inline FixedPointResult solve_fixed_point(const ModelSpec& model, const OperatorParams& params,
                                          const SpectralGrid& grid, const FixedPointOptions& opts = {}) {
  model.validate();
  const auto f = sample(model.source, grid);
  auto lin = solve_linear(f, params, opts);
  const auto k = contraction_constants(model, params, lin.u0_l2, opts.M_override);
  if (!k.admissible()) {
    throw AdmissibilityError("epsilon = " + format_g17(k.epsilon) + " exceeds epsilon_max = " +
                             format_g17(k.epsilon_max));
  }
  if (!(lin.u0_l2 > 0.0)) throw DegenerateModel("linear solution u0 vanishes; the source must be nontrivial");

  SolveReport rep;
  rep.sigma_theoretical = k.sigma;
  rep.epsilon = k.epsilon;
  rep.epsilon_max = k.epsilon_max;
  rep.c_ab = k.c_ab;
  rep.kernel_l1 = k.kernel_l1;
  rep.M = k.M;
  rep.u0_l2 = lin.u0_l2;
  rep.linear_residual = lin.residual_l2;
  rep.ratio_tol = opts.ratio_tol;
  rep.warnings = lin.warnings;

  const AuxiliaryMap tg(lin.u0, model, params);
  GridFunction v = opts.initial.value_or(GridFunction::zeros(grid));
  if (!(v.grid() == grid)) throw GridMismatch("initial iterate lives on a different grid");

  if (k.sigma == 0.0) {
    // eps = 0: t_g is identically zero.
    v = GridFunction::zeros(grid);
  } else {
    const double stop = opts.fp_tol * (1.0 - k.sigma) / k.sigma;
    bool converged = false;
    for (std::size_t it = 0; it < opts.max_iters; ++it) {
      auto next = tg(v);
      const double inc = l2_norm(next - v);
      if (!rep.increments.empty() && rep.increments.back() > 0.0) {
        rep.observed_ratios.push_back(inc / rep.increments.back());
      }
      rep.increments.push_back(inc);
      v = std::move(next);
      rep.iterations = it + 1;
      if (inc <= stop) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      throw MaxItersExceeded("fixed-point iteration did not converge within " + std::to_string(opts.max_iters) +
                             " iterations");
    }
    rep.a_posteriori_bound = k.sigma / (1.0 - k.sigma) * rep.increments.back();
  }

  rep.up_l2 = l2_norm(v);
  rep.fixed_point_residual = l2_norm(v - tg.unchecked(v));
  rep.perturbed_residual_l2 = residual_perturbed(v, lin.u0, model, params);
  auto u = lin.u0 + v;
  rep.main_residual_l2 = residual_main(u, model, params);
  return {std::move(lin.u0), std::move(v), std::move(u), k, std::move(rep)};
}

}  // namespace loglap
