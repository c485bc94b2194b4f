#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "loglap/experiments.hpp"

using namespace loglap;

namespace {

const SpectralGrid kGrid(1024, 40.0);
const OperatorParams kParams(0.0, 1.0);

ModelSpec model_at_fraction(double fraction, NonlinearitySpec g = NonlinearitySpec::scaled_sine(1.0),
                            double M = 0.0) {
  ModelSpec m{SourceSpec::gaussian_bump(0.0, 1.0, 1.0), KernelSpec::gaussian(1.0), g, 0.0, 1.0};
  const auto lin = solve_linear(sample(m.source, kGrid), kParams);
  m.epsilon = fraction * contraction_constants(m, kParams, lin.u0_l2, M > 0 ? std::optional(M) : std::nullopt).epsilon_max;
  return m;
}

template <typename T>
std::string csv(const T& x) {
  std::ostringstream os;
  write_csv(os, x);
  return os.str();
}

}  // namespace

TEST(ContractionAudit, IdenticalPairHasZeroRatio) {
  const auto m = model_at_fraction(0.5);
  const AuxiliaryMap tg(solve_linear(sample(m.source, kGrid), kParams).u0, m, kParams);
  const auto v = GridFunction::sample(kGrid, [](double x) { return 0.3 * std::exp(-x * x); });
  const auto row = audit_pair(tg, v, v);
  EXPECT_EQ(row.input_distance, 0.0);
  EXPECT_EQ(row.ratio, 0.0);
}

TEST(ContractionAudit, SeededTrialsStayBelowSigma) {
  const auto audit = run_contraction_audit(model_at_fraction(0.5), kParams, kGrid, 100, 42);
  ASSERT_EQ(audit.rows.size(), 100u);
  EXPECT_LT(audit.constants.sigma, 1.0);
  EXPECT_LE(audit.max_ratio, audit.constants.sigma);
  for (const auto& r : audit.rows) {
    EXPECT_GT(r.input_distance, 0.0);
    EXPECT_LE(r.input_distance, 2.0);
  }
}

TEST(ContractionAudit, HalvingEpsilonHalvesSigma) {
  const auto full = run_contraction_audit(model_at_fraction(0.5), kParams, kGrid, 40, 1);
  const auto half = run_contraction_audit(model_at_fraction(0.25), kParams, kGrid, 40, 1);
  EXPECT_NEAR(half.constants.sigma, 0.5 * full.constants.sigma, 1e-15);
  EXPECT_LE(half.max_ratio, half.constants.sigma);
}

TEST(ContractionAudit, DeterministicAcrossThreadCounts) {
  const auto m = model_at_fraction(0.5);
  const auto one = csv(run_contraction_audit(m, kParams, kGrid, 24, 42, 1));
  const auto three = csv(run_contraction_audit(m, kParams, kGrid, 24, 42, 3));
  EXPECT_EQ(one, three);
  EXPECT_EQ(one, csv(run_contraction_audit(m, kParams, kGrid, 24, 42, 1)));
}

TEST(ContractionAudit, RefusesInadmissibleEpsilon) {
  EXPECT_THROW(run_contraction_audit(model_at_fraction(1.5), kParams, kGrid, 4, 1), AdmissibilityError);
}

TEST(Continuity, IdenticalNonlinearities) {
  const auto m = model_at_fraction(0.5);
  const auto r = run_continuity(m, m, kParams, kGrid);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_GE(r.slack, 0.0);
}

TEST(Continuity, SineAmplitudeChange) {
  const auto a = model_at_fraction(0.5);
  auto b = a;
  b.nonlinearity = NonlinearitySpec::scaled_sine(0.9);
  const auto r = run_continuity(a, b, kParams, kGrid);
  ASSERT_TRUE(r.analytic_gap.has_value());
  EXPECT_NEAR(*r.analytic_gap, 0.1, 1e-15);
  EXPECT_LE(r.sampled_gap, 0.1 + 1e-15);
  EXPECT_NEAR(r.derivative_gap, 0.1, 1e-15);
  EXPECT_GT(r.lhs, 0.0);
  EXPECT_LE(r.lhs, r.rhs + 1e-8);
  EXPECT_LE(r.range_lo, -1.0);
  EXPECT_GE(r.range_hi, 1.0);
}

TEST(Continuity, SineVersusTanh) {
  const auto a = model_at_fraction(0.5);
  auto b = a;
  b.nonlinearity = NonlinearitySpec::tanh(1.0);
  const auto r = run_continuity(a, b, kParams, kGrid);
  EXPECT_FALSE(r.analytic_gap.has_value());
  // independent 1e6-point sample of |cos z - sech^2 z| on the same range
  double sup = 0.0;
  for (int i = 0; i < 1'000'000; ++i) {
    const double z = r.range_lo + (r.range_hi - r.range_lo) * i / 999'999.0;
    sup = std::max(sup, std::abs(std::cos(z) - 1.0 / (std::cosh(z) * std::cosh(z))));
  }
  EXPECT_DOUBLE_EQ(r.derivative_gap, sup);
  EXPECT_LE(r.lhs, r.rhs + 1e-8);
}

TEST(Continuity, UsesLargerLipschitzConstant) {
  const auto a = model_at_fraction(0.4, NonlinearitySpec::scaled_sine(1.0), 1.5);
  auto b = a;
  b.nonlinearity = NonlinearitySpec::tanh(1.5);
  const auto r = run_continuity(a, b, kParams, kGrid);
  EXPECT_EQ(r.M, 1.5);
  EXPECT_LE(r.lhs, r.rhs + 1e-8);
}

TEST(Continuity, RequiresSharedModel) {
  const auto a = model_at_fraction(0.5);
  auto b = a;
  b.kernel = KernelSpec::laplace(1.0);
  EXPECT_THROW(run_continuity(a, b, kParams, kGrid), ValidationError);
}

TEST(EpsilonSweep, RowsAndEnvelope) {
  const auto base = model_at_fraction(1.0);
  const double emax = base.epsilon;
  const std::vector<double> eps{0.0, emax / 8, emax / 4, emax / 2, 2 * emax};
  const auto rows = run_epsilon_sweep(base, kParams, kGrid, eps);
  ASSERT_EQ(rows.size(), eps.size());
  EXPECT_EQ(rows[0].up_l2, 0.0);
  EXPECT_TRUE(rows[0].error.empty());
  const double fnorm = l2_norm(sample(base.source, kGrid));
  for (std::size_t i = 1; i <= 3; ++i) {
    EXPECT_TRUE(rows[i].error.empty());
    EXPECT_LE(rows[i].up_l2, rows[i].bound + 1e-8);
    EXPECT_GT(rows[i].up_l2, rows[i - 1].up_l2);
    EXPECT_LE(rows[i].residual, 1e-8 * (fnorm + 1.0));
  }
  EXPECT_NEAR(rows[2].bound, 2 * rows[1].bound, 1e-15);
  EXPECT_EQ(rows[4].error, "AdmissibilityError");

  const auto text = csv(rows);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}
