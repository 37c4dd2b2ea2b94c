#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "raincop/error.hpp"
#include "raincop/marginals.hpp"
#include "raincop/numerics.hpp"
#include "raincop/rng.hpp"

using namespace raincop;

namespace {

const GammaMixture kLaw{0.6, 3.0, 1.2};

// Features N(0,1) and rainfall drawn from known coefficients.
struct JglmFixture {
  Eigen::MatrixXd x;
  std::vector<double> y;
  JglmCoefficients truth;
};

JglmFixture make_jglm_fixture(Eigen::Index n, std::uint64_t seed) {
  JglmFixture f;
  f.truth = JglmCoefficients::zeros(3);
  f.truth.alpha0 = 0.3;
  f.truth.alpha << 0.8, -0.5, 0.2;
  f.truth.beta0 = 1.0;
  f.truth.beta << 0.3, 0.1, -0.2;
  f.truth.gamma0 = -0.2;
  f.truth.gamma << 0.1, -0.1, 0.05;
  f.x.resize(n, 3);
  f.y.resize(static_cast<std::size_t>(n));
  Stream s(seed, StreamTag::kTest);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (int k = 0; k < 3; ++k) f.x(r, k) = s.normal();
    f.y[static_cast<std::size_t>(r)] = gm_sample(jglm_predict(f.x.row(r).transpose(), f.truth), s);
  }
  return f;
}

}  // namespace

TEST(GammaMixture, CdfAtZeroIsDryMassExactly) {
  for (double p : {0.0, 0.1, 0.6, 0.999, 1.0}) {
    EXPECT_EQ(gm_cdf({p, 3.0, 1.2}, 0.0), 1.0 - p);
  }
  EXPECT_THROW(gm_cdf(kLaw, -1.0), DomainError);
}

TEST(GammaMixture, ClosedFormCases) {
  EXPECT_NEAR(gm_cdf({1.0, 2.0, 1.0}, 2.0), 1 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(gm_quantile({1.0, 2.0, 1.0}, 1 - std::exp(-1.0)), 2.0, 1e-8);
  EXPECT_EQ(gm_quantile({0.3, 2.0, 1.0}, 0.5), 0.0);
  // P(2, 4/1.5) for shape 2 is 1 - (1 + x) e^{-x}.
  const double x = 4.0 / 1.5;
  EXPECT_NEAR(gm_cdf({0.5, 3.0, 0.5}, 4.0), 0.5 + 0.5 * (1 - (1 + x) * std::exp(-x)), 1e-15);
  const GammaMixture law{0.8, 5.0, 0.7};
  EXPECT_NEAR(gm_cdf(law, gm_quantile(law, 0.95)), 0.95, 1e-9);
  const GammaMixture wet30{0.3, 3.0, 1.2};
  for (double u : {0.701, 0.9, 0.99, 1 - 1e-6}) {
    EXPECT_NEAR(gm_cdf(wet30, gm_quantile(wet30, u)), u, 1e-8);
  }
}

TEST(GammaMixture, CdfMatchesReference) {
  EXPECT_NEAR(gm_cdf(kLaw, 0.5), 0.5156710921539708, 1e-14);
  EXPECT_NEAR(gm_cdf(kLaw, 3.0), 0.78652301264958724, 1e-14);
  EXPECT_NEAR(gm_cdf(kLaw, 20.0), 0.99849501845958998, 1e-14);
}

TEST(GammaMixture, CdfAgreesWithQuadratureOfDensity) {
  for (double y : {0.2, 1.0, 5.0}) {
    const double wet = oracle::gamma_cdf_quadrature(kLaw.shape(), kLaw.scale(), y);
    EXPECT_NEAR(gm_cdf(kLaw, y), 1 - kLaw.p + kLaw.p * wet, 1e-8);
  }
}

TEST(GammaMixture, QuantileMatchesReferenceAndDryMass) {
  EXPECT_NEAR(gm_quantile(kLaw, 0.9), 5.5000248588507561, 1e-10);
  EXPECT_EQ(gm_quantile(kLaw, 0.4), 0.0);
  EXPECT_EQ(gm_quantile(kLaw, 0.1), 0.0);
}

TEST(GammaMixture, QuantileRoundTrip) {
  for (double p : {0.05, 0.6, 1.0}) {
    for (double phi : {0.3, 1.2, 4.0}) {
      const GammaMixture law{p, 3.0, phi};
      for (int k = 1; k < 200; ++k) {
        const double u = (1 - p) + p * k / 200.0 * (1 - 1e-9);
        if (u <= 1 - p || u >= 1) continue;
        const double y = gm_quantile(law, u);
        EXPECT_NEAR(gm_cdf(law, y), u, 1e-8) << p << " " << phi << " " << u;
      }
    }
  }
}

TEST(GammaMixture, QuantileFromGaussianMatchesComposition) {
  for (double x : {-3.0, -0.2533471031357998, -0.1, 0.5, 2.0}) {
    const double u = numerics::std_normal_cdf(x);
    const double direct = u <= 1 - kLaw.p ? 0.0 : gm_quantile(kLaw, u);
    EXPECT_NEAR(gm_quantile_from_gaussian(kLaw, x), direct, 1e-9 * (1 + direct)) << x;
  }
  // In the upper tail compare survival probabilities, which keep precision.
  for (double x : {4.0, 6.0, 8.0}) {
    const double y = gm_quantile_from_gaussian(kLaw, x);
    const double survival =
        kLaw.p * numerics::reg_upper_inc_gamma(kLaw.shape(), y / kLaw.scale());
    EXPECT_NEAR(survival / numerics::std_normal_cdf(-x), 1.0, 1e-9) << x;
  }
  // Exactly at the threshold the outcome is dry.
  EXPECT_EQ(gm_quantile_from_gaussian(kLaw, latent_threshold(kLaw.p)), 0.0);
  // Deep upper tail stays finite and increasing.
  EXPECT_LT(gm_quantile_from_gaussian(kLaw, 8.0), gm_quantile_from_gaussian(kLaw, 9.0));
}

TEST(GammaMixture, LatentThresholdSentinels) {
  EXPECT_EQ(latent_threshold(0.0), std::numeric_limits<double>::infinity());
  EXPECT_EQ(latent_threshold(1.0), -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(latent_threshold(0.6), -0.2533471031357998, 1e-15);
  EXPECT_EQ(gm_quantile_from_gaussian({0.0, 3.0, 1.2}, 40.0), 0.0);
}

TEST(GammaMixture, SamplesMatchMixtureMoments) {
  Stream s(5, StreamTag::kTest);
  const int n = 200000;
  int dry = 0;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double y = gm_sample(kLaw, s);
    ASSERT_GE(y, 0.0);
    dry += y == 0.0;
    sum += y;
  }
  EXPECT_NEAR(dry / double(n), 0.4, 4 * std::sqrt(0.24 / n));
  // mean = p mu, var = p (phi mu^2 + mu^2) - (p mu)^2
  const double var = 0.6 * (1.2 * 9 + 9) - 1.8 * 1.8;
  EXPECT_NEAR(sum / n, 1.8, 4 * std::sqrt(var / n));
}

TEST(GammaMixture, ValidateRejectsBadParameters) {
  EXPECT_THROW((GammaMixture{1.5, 1, 1}.validate()), DomainError);
  EXPECT_THROW((GammaMixture{0.5, 0, 1}.validate()), DomainError);
  EXPECT_THROW((GammaMixture{0.5, 1, -1}.validate()), DomainError);
  EXPECT_THROW((GammaMixture{NAN, 1, 1}.validate()), DomainError);
}

TEST(Losses, MatchReference) {
  EXPECT_NEAR(gamma_nll(3.0, 1.2, 2.0), 1.8596685881983717, 1e-13);
  EXPECT_NEAR(logistic_loss(0.6, 1.0), -std::log(0.6), 1e-15);
  EXPECT_NEAR(logistic_loss(0.6, 0.0), -std::log(0.4), 1e-15);
  EXPECT_NEAR(logistic_loss(0.0, 1.0), -std::log(kProbabilityClip), 1e-9);
  EXPECT_NEAR(observation_loss(kLaw, 2.0), -std::log(0.6) + 1.8596685881983717, 1e-13);
  EXPECT_NEAR(observation_loss(kLaw, 0.0), -std::log(0.4), 1e-15);
}

TEST(Losses, GammaNllIsMinusLogDensity) {
  for (double y : {0.1, 1.0, 7.0}) {
    EXPECT_NEAR(std::exp(-gamma_nll(3.0, 1.2, y)), gm_density(kLaw, y) / kLaw.p, 1e-14);
  }
}

TEST(Jglm, GradientMatchesFiniteDifferences) {
  const JglmFixture f = make_jglm_fixture(300, 21);
  JglmCoefficients c = f.truth;
  c.alpha0 += 0.1;
  c.beta(1) -= 0.2;
  c.gamma(2) += 0.15;
  Eigen::VectorXd g;
  jglm_loss(f.x, f.y, c, &g);
  ASSERT_EQ(g.size(), 12);
  // Perturb each packed coordinate in turn.
  auto coord = [](JglmCoefficients& k, int idx) -> double& {
    if (idx == 0) return k.alpha0;
    if (idx < 4) return k.alpha(idx - 1);
    if (idx == 4) return k.beta0;
    if (idx < 8) return k.beta(idx - 5);
    if (idx == 8) return k.gamma0;
    return k.gamma(idx - 9);
  };
  for (int idx = 0; idx < 12; ++idx) {
    const double h = 1e-6;
    JglmCoefficients up = c, down = c;
    coord(up, idx) += h;
    coord(down, idx) -= h;
    const double fd = (jglm_loss(f.x, f.y, up) - jglm_loss(f.x, f.y, down)) / (2 * h);
    EXPECT_NEAR(g(idx), fd, 1e-5 * (1 + std::abs(fd))) << "coordinate " << idx;
  }
}

TEST(Jglm, MatchesIndependentMaximumLikelihood) {
  // Minimizer of the same summed loss found by BFGS + Nelder-Mead in scipy on
  // the identical 5000-row fixture.
  const double mle[12] = {0.303394, 0.849059,  -0.565632, 0.205538,
                          0.991193, 0.320637,  0.119464,  -0.169264,
                          -0.200914, 0.092591, -0.077228, 0.094271};
  const JglmFixture f = make_jglm_fixture(5000, 2024);
  const JglmFitResult r = jglm_fit(f.x, f.y, std::make_shared<IdentityTransform>(3));
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.final_loss, r.initial_loss);
  EXPECT_NEAR(r.final_loss, 8707.298032064686, 1e-5);
  const JglmCoefficients& c = r.coeffs;
  const double got[12] = {c.alpha0, c.alpha(0), c.alpha(1), c.alpha(2),
                          c.beta0,  c.beta(0),  c.beta(1),  c.beta(2),
                          c.gamma0, c.gamma(0), c.gamma(1), c.gamma(2)};
  for (int k = 0; k < 12; ++k) EXPECT_NEAR(got[k], mle[k], 2e-4) << k;
}

TEST(Jglm, RecoversTruthWithinSamplingError) {
  // Standard errors here are about 0.035, so 0.15 is over four of them.
  const JglmFixture f = make_jglm_fixture(5000, 77);
  const JglmFitResult r = jglm_fit(f.x, f.y, std::make_shared<IdentityTransform>(3));
  EXPECT_NEAR(r.coeffs.alpha0, f.truth.alpha0, 0.15);
  EXPECT_NEAR(r.coeffs.beta0, f.truth.beta0, 0.15);
  EXPECT_NEAR(r.coeffs.gamma0, f.truth.gamma0, 0.15);
  EXPECT_LT((r.coeffs.alpha - f.truth.alpha).cwiseAbs().maxCoeff(), 0.15);
  EXPECT_LT((r.coeffs.beta - f.truth.beta).cwiseAbs().maxCoeff(), 0.15);
  EXPECT_LT((r.coeffs.gamma - f.truth.gamma).cwiseAbs().maxCoeff(), 0.15);
}

TEST(Jglm, LossHistoryIsMonotone) {
  const JglmFixture f = make_jglm_fixture(800, 8);
  const JglmFitResult r = jglm_fit(f.x, f.y, std::make_shared<IdentityTransform>(3));
  for (std::size_t i = 1; i < r.loss_history.size(); ++i) {
    EXPECT_LE(r.loss_history[i], r.loss_history[i - 1]);
  }
}

TEST(Jglm, StandardizedFitPredictsSameLaws) {
  JglmFixture f = make_jglm_fixture(1500, 9);
  Eigen::MatrixXd shifted = f.x;
  shifted.col(0) = shifted.col(0) * 10.0 + Eigen::VectorXd::Constant(shifted.rows(), 50.0);
  const auto t = std::make_shared<StandardizeTransform>(StandardizeTransform::fit(shifted));
  const JglmFitResult r = jglm_fit(shifted, f.y, t);
  const JglmFitResult plain = jglm_fit(f.x, f.y, std::make_shared<IdentityTransform>(3));
  for (Eigen::Index row = 0; row < 20; ++row) {
    const GammaMixture a = jglm_predict(t->apply(shifted.row(row).transpose()), r.coeffs);
    const GammaMixture b = jglm_predict(f.x.row(row).transpose(), plain.coeffs);
    EXPECT_NEAR(a.p, b.p, 2e-3);
    EXPECT_NEAR(a.mu / b.mu, 1.0, 5e-3);
  }
}

TEST(Jglm, RejectsAllWetOrAllDry) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
  const std::vector<double> wet{1, 2, 3, 4};
  const std::vector<double> dry{0, 0, 0, 0};
  const auto t = std::make_shared<IdentityTransform>(1);
  EXPECT_THROW(jglm_fit(x, wet, t), DomainError);
  EXPECT_THROW(jglm_fit(x, dry, t), DomainError);
}

TEST(Jglm, CoefficientDocumentRoundTrips) {
  const JglmFixture f = make_jglm_fixture(10, 1);
  const StandardizeTransform t(Eigen::Vector3d(1.5, -2, 0.25), Eigen::Vector3d(2, 1, 0.1));
  std::stringstream ss;
  write_coefficients(ss, f.truth, t);
  const CoefficientDocument doc = read_coefficients(ss);
  EXPECT_EQ(doc.coeffs.alpha0, f.truth.alpha0);
  EXPECT_EQ(doc.coeffs.gamma, f.truth.gamma);
  EXPECT_EQ(doc.coeffs.beta, f.truth.beta);
  EXPECT_EQ(doc.transform->name(), "standardize");
  const Eigen::Vector3d x(0.3, 0.2, 0.1);
  EXPECT_EQ(doc.transform->apply(x), t.apply(x));

  std::istringstream bad("feature_dim=1\ntransform=identity\nalpha0=x\n");
  EXPECT_THROW(read_coefficients(bad, "coeffs.txt"), IngestionError);
}

TEST(MarginalField, PredictFieldUsesDayMajorRows) {
  JglmCoefficients c = JglmCoefficients::zeros(1);
  c.alpha << 1.0;
  Eigen::MatrixXd x(6, 1);  // 3 locations, 2 days
  x << 0, 1, 2, 3, 4, 5;
  const MarginalField field = predict_field(x, 3, 2, c, IdentityTransform(1));
  EXPECT_NEAR(field.at(1, 1).p, 1 / (1 + std::exp(-4.0)), 1e-15);
  EXPECT_NEAR(field.at(2, 0).p, 1 / (1 + std::exp(-2.0)), 1e-15);
}
