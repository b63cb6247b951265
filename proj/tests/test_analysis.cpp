#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "darkring/analysis.hpp"

using namespace darkring;

namespace {

RelaxationCurve synthetic(double c, double tau0, double beta, double noise = 0.0, unsigned seed = 1,
                          ChirpForm form = ChirpForm::direct, double t_max = 1.5, int n = 151, double time_unit = 1.0) {
  FitResult truth;
  truth.model = beta == 0.0 ? RelaxationModel::single : RelaxationModel::chirped;
  truth.form = form;
  truth.c = c;
  truth.tau = tau0;
  truth.beta = beta;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  RelaxationCurve curve;
  for (int i = 1; i <= n; ++i) {
    const double t = t_max * i / n;
    const double f = relaxation_model(truth, t) + noise * gauss(rng);
    curve.time.push_back(t * time_unit);
    curve.f3.push_back(std::clamp(f, 0.0, 1.0));
  }
  return curve;
}

}  // namespace

TEST(SingleExp, RecoversExactParameters) {
  const auto f = fit_single_exp(synthetic(0.58, 0.230, 0.0));
  EXPECT_TRUE(f.converged);
  EXPECT_FALSE(f.degenerate);
  EXPECT_NEAR(f.c, 0.58, 0.01 * 0.58);
  EXPECT_NEAR(f.tau, 0.230, 0.01 * 0.230);
}

TEST(SingleExp, NeedsFourPoints) {
  RelaxationCurve c{{0.1, 0.2, 0.3}, {0.1, 0.2, 0.25}, {}};
  EXPECT_THROW(fit_single_exp(c), ParameterError);
}

TEST(SingleExp, ConstantCurveIsDegenerate) {
  RelaxationCurve c{{0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, std::vector<double>(6, 0.3), {}};
  EXPECT_THROW(fit_single_exp(c), DegenerateFitError);
  EXPECT_THROW(fit_chirped(c), DegenerateFitError);
}

TEST(Curve, ValidationRejectsBadInput) {
  RelaxationCurve c{{0.1, 0.1, 0.3, 0.4}, {0.1, 0.2, 0.3, 0.4}, {}};
  EXPECT_THROW(c.validate(), ParameterError);
  c = {{0.1, 0.2, 0.3, 0.4}, {0.1, 0.2, 1.3, 0.4}, {}};
  EXPECT_THROW(c.validate(), ParameterError);
  c = {{0.1, 0.2, 0.3, 0.4}, {0.1, 0.2, 0.3}, {}};
  EXPECT_THROW(c.validate(), ShapeError);
}

TEST(Chirped, RecoversChirpedParameters) {
  for (auto form : {ChirpForm::direct, ChirpForm::integrated}) {
    const auto f = fit_chirped(synthetic(0.58, 0.035, 0.148, 0.0, 1, form), form);
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(f.c, 0.58, 1e-3);
    EXPECT_NEAR(f.tau, 0.035, 1e-3 * 0.035);
    EXPECT_NEAR(f.beta, 0.148, 1e-3 * 0.148);
  }
}

TEST(Chirped, ZeroChirpReducesToSingle) {
  const auto curve = synthetic(0.58, 0.230, 0.0);
  const auto s = fit_single_exp(curve);
  const auto c = fit_chirped(curve);
  EXPECT_NEAR(c.c, s.c, 0.01 * s.c);
  EXPECT_NEAR(c.tau, s.tau, 0.01 * s.tau);
  EXPECT_NEAR(c.beta, 0.0, 1e-4);
}

TEST(Chirped, NeedsSixPoints) {
  RelaxationCurve c{{0.1, 0.2, 0.3, 0.4, 0.5}, {0.1, 0.2, 0.25, 0.3, 0.32}, {}};
  EXPECT_THROW(fit_chirped(c), ParameterError);
}

TEST(Chirped, NestedResidualNeverWorse) {
  for (unsigned seed = 1; seed <= 5; ++seed) {
    for (double beta : {0.0, 0.1, 0.3}) {
      const auto curve = synthetic(0.58, 0.1, beta, 0.02, seed);
      const auto s = fit_single_exp(curve);
      const auto c = fit_chirped(curve);
      EXPECT_LE(c.ssr, s.ssr * (1.0 + 1e-8) + 1e-14) << seed << " " << beta;
    }
  }
}

TEST(Fits, InvariantUnderTimeUnits) {
  const auto in_s = synthetic(0.58, 0.05, 0.12, 0.01, 3);
  const auto in_ms = synthetic(0.58, 0.05, 0.12, 0.01, 3, ChirpForm::direct, 1.5, 151, 1e3);
  const auto a = fit_single_exp(in_s), b = fit_single_exp(in_ms);
  EXPECT_NEAR(b.c, a.c, 1e-6 * a.c);
  EXPECT_NEAR(b.tau / 1e3, a.tau, 1e-6 * a.tau);
  const auto ca = fit_chirped(in_s), cb = fit_chirped(in_ms);
  EXPECT_NEAR(cb.c, ca.c, 1e-6 * ca.c);
  EXPECT_NEAR(cb.tau / 1e3, ca.tau, 1e-6 * ca.tau);
  EXPECT_NEAR(cb.beta / std::sqrt(1e3), ca.beta, 1e-6 * ca.beta);
}

TEST(Fits, ConvergeToTruthAsNoiseShrinks) {
  const double levels[] = {0.05, 0.01, 0.002};
  double prev_tau = 1e9, prev_beta = 1e9;
  for (double noise : levels) {
    double err_tau = 0.0, err_beta = 0.0;
    for (unsigned seed = 1; seed <= 8; ++seed) {
      const auto f = fit_chirped(synthetic(0.58, 0.05, 0.15, noise, seed));
      err_tau += std::abs(f.tau - 0.05) / 8.0;
      err_beta += std::abs(f.beta - 0.15) / 8.0;
    }
    EXPECT_LT(err_tau, prev_tau) << noise;
    EXPECT_LT(err_beta, prev_beta) << noise;
    prev_tau = err_tau;
    prev_beta = err_beta;
  }
  EXPECT_LT(prev_tau, 0.02 * 0.05);
  EXPECT_LT(prev_beta, 0.02 * 0.15);
}

TEST(Fits, FittedModelMonotone) {
  for (unsigned seed = 1; seed <= 4; ++seed) {
    const auto curve = synthetic(0.58, 0.04, 0.2, 0.03, seed);
    for (const auto& f : {fit_single_exp(curve), fit_chirped(curve), fit_chirped(curve, ChirpForm::integrated)}) {
      EXPECT_GT(f.tau, 0.0);
      EXPECT_GE(f.beta, 0.0);
      double prev = -1.0;
      for (double t = curve.time.front(); t <= curve.time.back(); t += 1e-3) {
        const double v = relaxation_model(f, t);
        EXPECT_GE(v, prev - 1e-12);
        prev = v;
      }
    }
  }
}

TEST(Fits, WeightedUncertaintiesFollowQuotedSigma) {
  // Honest sigma gives the covariance errors; a sigma ten times too large
  // widens them tenfold, a sigma too small is caught by the reduced chi-square.
  auto curve = synthetic(0.58, 0.1, 0.0, 0.01, 4);
  curve.sigma.assign(curve.time.size(), 0.01);
  const auto honest = fit_single_exp(curve);
  curve.sigma.assign(curve.time.size(), 0.1);
  const auto wide = fit_single_exp(curve);
  curve.sigma.assign(curve.time.size(), 0.001);
  const auto narrow = fit_single_exp(curve);
  curve.sigma.clear();
  const auto plain = fit_single_exp(curve);
  EXPECT_TRUE(honest.weighted);
  EXPECT_FALSE(plain.weighted);
  EXPECT_NEAR(wide.tau_err / honest.tau_err, 10.0, 1.5);
  EXPECT_NEAR(narrow.tau_err / plain.tau_err, 1.0, 1e-6);
}

TEST(Comparison, ChirpedDataPreferChirped) {
  const auto m = model_comparison(synthetic(0.58, 0.035, 0.148, 0.01, 2));
  EXPECT_TRUE(m.valid);
  EXPECT_TRUE(m.chirped_preferred);
  EXPECT_LT(m.p_value, 1e-6);
}

TEST(Comparison, SingleExpDataNotRejected) {
  int rejected = 0;
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto m = model_comparison(synthetic(0.58, 0.23, 0.0, 0.01, seed));
    rejected += m.chirped_preferred;
  }
  // Nominal false-positive rate is 5%.
  EXPECT_LE(rejected, 3);
}

TEST(Comparison, WhiteNoiseIsFlagged) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.3, 0.02);
  RelaxationCurve c;
  for (int i = 1; i <= 100; ++i) {
    c.time.push_back(0.015 * i);
    c.f3.push_back(g(rng));
  }
  const auto m = model_comparison(c);
  EXPECT_FALSE(m.valid);
  EXPECT_FALSE(m.chirped_preferred);
  EXPECT_TRUE(m.single.degenerate || m.chirped.degenerate || !m.single.converged || !m.chirped.converged);
  EXPECT_FALSE(m.note.empty());
}

TEST(Oscillation, RecoversTwoHertz) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<double> t, y;
  for (int i = 0; i < 150; ++i) {
    t.push_back(0.01 * i);
    y.push_back(std::sin(constants::two_pi * 2.0 * t.back() + 0.4) + g(rng));
  }
  const auto o = oscillation_frequency(t, y);
  EXPECT_NEAR(o.frequency, 2.0, 0.02 * 2.0);
  EXPECT_NEAR(o.amplitude, 1.0, 0.05);
}

TEST(Oscillation, DampedTraceWithOffset) {
  std::vector<double> t, y;
  for (int i = 0; i < 300; ++i) {
    t.push_back(0.005 * i);
    y.push_back(3e-3 + 1e-4 * std::exp(-0.8 * t.back()) * std::cos(constants::two_pi * 2.7 * t.back()));
  }
  const auto o = oscillation_frequency(t, y);
  EXPECT_NEAR(o.frequency, 2.7, 1e-3);
  EXPECT_NEAR(o.damping, 0.8, 1e-2);
  EXPECT_NEAR(o.offset, 3e-3, 1e-7);
}

TEST(Oscillation, ConstantTraceHasNoOscillation) {
  std::vector<double> t, y(100, 1.0);
  for (int i = 0; i < 100; ++i) t.push_back(0.01 * i);
  EXPECT_THROW(oscillation_frequency(t, y), NoOscillationError);
}

TEST(Oscillation, NonUniformSamplingRejected) {
  std::vector<double> t{0.0, 0.1, 0.2, 0.35, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> y(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) y[i] = std::sin(10.0 * t[i]);
  EXPECT_THROW(oscillation_frequency(t, y), ParameterError);
}

TEST(Lifetimes, TauAtHalfSecondByConstruction) {
  FitResult f;
  f.model = RelaxationModel::chirped;
  f.converged = true;
  f.c = 0.58;
  f.tau = 0.035;
  // Implied chirp from lifetimes of 35 ms at t = 0 and 140 ms at t = 0.5 s.
  f.beta = (0.140 - 0.035) / std::sqrt(0.5);
  EXPECT_NEAR(f.beta, 0.1485, 5e-4);
  const auto rows = lifetime_table({{0.5, f}});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].tau_500ms, f.tau + f.beta * std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(rows[0].tau_500ms, 0.140, 1e-12);
  EXPECT_EQ(rows[0].tau_0, 0.035);
}

TEST(Lifetimes, NeedsConvergedChirpedFit) {
  FitResult s;
  s.converged = true;
  EXPECT_THROW(lifetime_table({{1.0, s}}), ParameterError);
}

TEST(RelaxationCurveFromRecord, BinomialErrors) {
  TrajectoryRecord rec;
  rec.time = {0.0, 0.01, 0.02};
  rec.f3_fraction = {0.0, 0.25, 0.5};
  rec.n_counted = {100, 100, 0};
  const auto c = relaxation_curve(rec);
  ASSERT_EQ(c.time.size(), 2u);
  const double p = (25.0 + 1.0) / 102.0;
  EXPECT_NEAR(c.sigma[1], std::sqrt(p * (1.0 - p) / 100.0), 1e-15);
  EXPECT_GT(c.sigma[0], 0.0);
}
