#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "loglap/errors.hpp"
#include "loglap/model_library.hpp"
#include "loglap/operator_core.hpp"
#include "loglap/solver.hpp"
#include "loglap/spectral_grid.hpp"

namespace loglap {

/// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
/// handled by exactly one worker, so results written by index are independent
/// of scheduling.
template <typename Body>
void parallel_for(std::size_t count, int threads, Body&& body) {
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1,
                                                      std::max<std::size_t>(count, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  }
}

// ---------------------------------------------------------------------------
// Random ball elements
// ---------------------------------------------------------------------------

struct BallSampler {
  double rho = 1.0;
  double band = 4.0;  // Gaussian spectral envelope width, in frequency units
};

/// Smooth real field with Hermitian Fourier coefficients
/// e^{-p_k^2/(2 band^2)} (A_k + i B_k), A_k, B_k ~ N(0,1), on the modes with
/// 0 < |p_k| <= 4 band, rescaled to l2 = rho * U(0,1].
inline GridFunction random_ball_element(const SpectralGrid& grid, const BallSampler& sampler, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = grid.size();
  std::vector<cplx> F(n);
  for (std::size_t k = 1; k < n / 2; ++k) {
    const double p = grid.freq(k);
    if (p > 4.0 * sampler.band) break;
    const double env = std::exp(-p * p / (2.0 * sampler.band * sampler.band));
    const double A = normal(rng), B = normal(rng);
    F[k] = env * cplx(A, B);
    F[n - k] = std::conj(F[k]);
  }
  auto f = ft_inverse(GridFunction(grid, Domain::frequency, std::move(F)), Output::real_valued);
  const double norm = l2_norm(f);
  const double target = sampler.rho * (1.0 - unit(rng));  // (0, rho]
  return (norm > 0.0 ? target / norm : 0.0) * f;
}

// ---------------------------------------------------------------------------
// Contraction audit
// ---------------------------------------------------------------------------

struct AuditRow {
  double input_distance = 0.0;   // |v1 - v2|_2
  double output_distance = 0.0;  // |t_g v1 - t_g v2|_2
  double ratio = 0.0;            // output / input, 0 when v1 == v2
};

struct AuditResult {
  std::vector<AuditRow> rows;
  ContractionConstants constants;
  double max_ratio = 0.0;
};

inline AuditRow audit_pair(const AuxiliaryMap& tg, const GridFunction& v1, const GridFunction& v2) {
  AuditRow r;
  r.input_distance = l2_norm(v1 - v2);
  r.output_distance = l2_norm(tg(v1) - tg(v2));
  r.ratio = r.input_distance > 0.0 ? r.output_distance / r.input_distance : 0.0;
  return r;
}

/// Draws `trials` seeded pairs from B_rho and measures the Lipschitz ratio of
/// t_g on each. Trial i uses its own generator seeded with (seed, i).
inline AuditResult run_contraction_audit(const ModelSpec& model, const OperatorParams& params,
                                         const SpectralGrid& grid, std::size_t trials, std::uint64_t seed,
                                         int threads = 1) {
  model.validate();
  const auto lin = solve_linear(sample(model.source, grid), params);
  AuditResult out;
  out.constants = contraction_constants(model, params, lin.u0_l2);
  if (!out.constants.admissible()) {
    throw AdmissibilityError("contraction audit: epsilon exceeds epsilon_max");
  }
  const AuxiliaryMap tg(lin.u0, model, params);
  const BallSampler sampler{model.rho};
  out.rows.resize(trials);
  parallel_for(trials, threads, [&](std::size_t i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i)};
    std::mt19937_64 rng(seq);
    const auto v1 = random_ball_element(grid, sampler, rng);
    const auto v2 = random_ball_element(grid, sampler, rng);
    out.rows[i] = audit_pair(tg, v1, v2);
  });
  for (const auto& r : out.rows) out.max_ratio = std::max(out.max_ratio, r.ratio);
  return out;
}

inline void write_csv(std::ostream& os, const AuditResult& a) {
  os << "trial,input_distance,output_distance,ratio,sigma\n";
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    const auto& r = a.rows[i];
    os << i << ',' << format_g17(r.input_distance) << ',' << format_g17(r.output_distance) << ','
       << format_g17(r.ratio) << ',' << format_g17(a.constants.sigma) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Continuity in g'
// ---------------------------------------------------------------------------

struct ContinuityExperimentResult {
  NonlinearitySpec g1;
  NonlinearitySpec g2;
  double lhs = 0.0;  // |u1 - u2|_2
  double rhs = 0.0;  // eps/(1-sigma) |K|_1/C (|u0|_2 + 1) |g1' - g2'|_inf
  double slack = 0.0;
  double derivative_gap = 0.0;  // |g1' - g2'|_inf used in rhs
  double sampled_gap = 0.0;
  std::optional<double> analytic_gap;
  double range_lo = 0.0;
  double range_hi = 0.0;
  double M = 0.0;  // max(M1, M2)
  double sigma = 0.0;
  double epsilon = 0.0;
  double epsilon_max = 0.0;
  double u0_l2 = 0.0;
};

/// sup |g1' - g2'| over n equally spaced points of [lo, hi].
inline double sampled_derivative_gap(const NonlinearitySpec& g1, const NonlinearitySpec& g2, double lo, double hi,
                                     std::size_t n = 1'000'000) {
  double best = 0.0;
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = lo + h * static_cast<double>(i);
    best = std::max(best, std::abs(g1.derivative(z) - g2.derivative(z)));
  }
  return best;
}

/// Closed form of sup_R |g1' - g2'| when both belong to the same built-in
/// family: |beta1 - beta2| times the family's sup |g'| at beta = 1, which is 1.
inline std::optional<double> analytic_derivative_gap(const NonlinearitySpec& g1, const NonlinearitySpec& g2) {
  if (g1.family != g2.family || g1.family == NonlinearityFamily::custom) return std::nullopt;
  return std::abs(g1.beta - g2.beta);
}

inline void require_shared_model(const ModelSpec& a, const ModelSpec& b) {
  const bool same = a.epsilon == b.epsilon && a.rho == b.rho && a.kernel.family == b.kernel.family &&
                    a.kernel.parameter == b.kernel.parameter && a.kernel.scale == b.kernel.scale &&
                    a.source.family == b.source.family && a.source.center == b.source.center &&
                    a.source.width == b.source.width && a.source.width2 == b.source.width2 &&
                    a.source.amplitude == b.source.amplitude;
  if (!same) throw ValidationError("continuity experiment: models must share f, K, epsilon and rho");
}

/// Solves both fixed points with sigma built from M = max(M1, M2) and compares
/// |u1 - u2|_2 with the continuity bound.
inline ContinuityExperimentResult run_continuity(const ModelSpec& modelA, const ModelSpec& modelB,
                                                 const OperatorParams& params, const SpectralGrid& grid,
                                                 const SolverOptions& solver = {}) {
  require_shared_model(modelA, modelB);
  const double M = std::max(lipschitz_bound(modelA.nonlinearity), lipschitz_bound(modelB.nonlinearity));
  FixedPointOptions opts;
  static_cast<SolverOptions&>(opts) = solver;
  opts.M_override = M;
  const auto s1 = solve_fixed_point(modelA, params, grid, opts);
  const auto s2 = solve_fixed_point(modelB, params, grid, opts);

  ContinuityExperimentResult r;
  r.g1 = modelA.nonlinearity;
  r.g2 = modelB.nonlinearity;
  r.M = M;
  r.sigma = s1.constants.sigma;
  r.epsilon = s1.constants.epsilon;
  r.epsilon_max = s1.constants.epsilon_max;
  r.u0_l2 = s1.report.u0_l2;
  r.lhs = l2_norm(s1.u - s2.u);

  // G_{1,2} - G_{2,2} integrates g1' - g2' from 0 to u0 + u_{p,2}.
  const auto w = s2.u.real_part();
  const auto [mn, mx] = std::minmax_element(w.begin(), w.end());
  r.range_lo = std::min(0.0, *mn) - 1.0;
  r.range_hi = std::max(0.0, *mx) + 1.0;
  r.sampled_gap = sampled_derivative_gap(r.g1, r.g2, r.range_lo, r.range_hi);
  r.analytic_gap = analytic_derivative_gap(r.g1, r.g2);
  r.derivative_gap = std::max(r.sampled_gap, r.analytic_gap.value_or(0.0));

  r.rhs = r.epsilon / (1.0 - r.sigma) * modelA.kernel.l1_norm() / params.c_ab() * (r.u0_l2 + 1.0) *
          r.derivative_gap;
  r.slack = r.rhs - r.lhs;
  return r;
}

/// Pairs checked by default: identical maps, a small amplitude change, and two
/// different families with the same M.
inline std::vector<std::pair<NonlinearitySpec, NonlinearitySpec>> shipped_continuity_pairs() {
  return {
      {NonlinearitySpec::scaled_sine(1.0), NonlinearitySpec::scaled_sine(1.0)},
      {NonlinearitySpec::scaled_sine(1.0), NonlinearitySpec::scaled_sine(0.9)},
      {NonlinearitySpec::scaled_sine(1.0), NonlinearitySpec::tanh(1.0)},
  };
}

inline void write_csv(std::ostream& os, const std::vector<ContinuityExperimentResult>& rows) {
  os << "g1,beta1,g2,beta2,lhs,rhs,slack,derivative_gap,sampled_gap,range_lo,range_hi,M,sigma,epsilon\n";
  for (const auto& r : rows) {
    os << family_name(r.g1.family) << ',' << format_g17(r.g1.beta) << ',' << family_name(r.g2.family) << ','
       << format_g17(r.g2.beta) << ',' << format_g17(r.lhs) << ',' << format_g17(r.rhs) << ','
       << format_g17(r.slack) << ',' << format_g17(r.derivative_gap) << ',' << format_g17(r.sampled_gap) << ','
       << format_g17(r.range_lo) << ',' << format_g17(r.range_hi) << ',' << format_g17(r.M) << ','
       << format_g17(r.sigma) << ',' << format_g17(r.epsilon) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Epsilon sweep
// ---------------------------------------------------------------------------

struct SweepRow {
  double epsilon = 0.0;
  double sigma = 0.0;
  double up_l2 = 0.0;
  double bound = 0.0;  // eps |K|_1 M (|u0|_2 + 1) / C
  std::size_t iterations = 0;
  double residual = 0.0;
  std::string error;  // empty when the row solved
};

/// One fixed-point solve per epsilon; inadmissible rows record the error.
inline std::vector<SweepRow> run_epsilon_sweep(const ModelSpec& model, const OperatorParams& params,
                                               const SpectralGrid& grid, const std::vector<double>& epsilons,
                                               int threads = 1, const SolverOptions& solver = {}) {
  std::vector<SweepRow> rows(epsilons.size());
  parallel_for(epsilons.size(), threads, [&](std::size_t i) {
    ModelSpec m = model;
    m.epsilon = epsilons[i];
    SweepRow& row = rows[i];
    row.epsilon = epsilons[i];
    try {
      FixedPointOptions opts;
      static_cast<SolverOptions&>(opts) = solver;
      const auto s = solve_fixed_point(m, params, grid, opts);
      row.sigma = s.constants.sigma;
      row.up_l2 = s.report.up_l2;
      row.bound = m.epsilon * s.constants.kernel_l1 * s.constants.M * (s.constants.u0_l2 + 1.0) / s.constants.c_ab;
      row.iterations = s.report.iterations;
      row.residual = s.report.main_residual_l2;
    } catch (const Error& e) {
      row.error = e.kind();
    }
  });
  return rows;
}

inline void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "epsilon,sigma,up_l2,bound,iterations,residual,error\n";
  for (const auto& r : rows) {
    os << format_g17(r.epsilon) << ',' << format_g17(r.sigma) << ',' << format_g17(r.up_l2) << ','
       << format_g17(r.bound) << ',' << r.iterations << ',' << format_g17(r.residual) << ',' << r.error << '\n';
  }
}

}  // namespace loglap
