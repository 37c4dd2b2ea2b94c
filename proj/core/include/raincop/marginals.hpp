#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "raincop/panel.hpp"
#include "raincop/rng.hpp"

namespace raincop {

// Zero-gamma mixture: point mass 1 - p at zero and, with probability p, a
// gamma amount with mean mu and dispersion phi (shape 1/phi, scale phi*mu,
// variance phi*mu^2). p is the probability that rain occurs.
struct GammaMixture {
  double p = 0.5;
  double mu = 1.0;
  double phi = 1.0;

  double shape() const { return 1.0 / phi; }
  double scale() const { return phi * mu; }
  /// Throws DomainError unless p in [0,1], mu > 0, phi > 0, all finite.
  void validate() const;
};

/// Distribution function. gm_cdf(law, 0) is exactly 1 - p.
double gm_cdf(const GammaMixture& law, double y);

/// Density of the continuous part for y > 0 (p times the gamma density).
double gm_density(const GammaMixture& law, double y);

/// Quantile on (0,1): 0 when u <= 1 - p, otherwise the positive root of
/// gm_cdf(y) = u.
double gm_quantile(const GammaMixture& law, double u);

/// Gaussian-scale threshold of the zero mass, Phi^{-1}(1 - p). Returns +inf
/// for p == 0 (always dry) and -inf for p == 1 (never dry).
double latent_threshold(double p);

/// Quantile of the uniform Phi(x) for a latent standard-normal value x.
/// Equal to gm_quantile(law, Phi(x)) but evaluated through the upper tail when
/// x > 0, so large x keeps full precision. Returns exactly 0 for dry outcomes,
/// which are the x <= latent_threshold(p).
double gm_quantile_from_gaussian(const GammaMixture& law, double x);

/// One draw by inversion of a uniform from `stream`.
double gm_sample(const GammaMixture& law, Stream& stream);

inline constexpr double kProbabilityClip = 1e-12;

/// Binary cross-entropy of rain occurrence: -log p when y > 0, -log(1-p)
/// when y == 0. p is clipped to [1e-12, 1 - 1e-12].
double logistic_loss(double p, double y);

/// Negative log of the gamma density with mean mu and dispersion phi at y>0.
double gamma_nll(double mu, double phi, double y);

/// Per-observation loss: logistic term, plus the gamma term when y > 0.
double observation_loss(const GammaMixture& law, double y);

/// Regression coefficients of the three link-linear predictors.
struct JglmCoefficients {
  double alpha0 = 0.0;
  Eigen::VectorXd alpha;
  double beta0 = 0.0;
  Eigen::VectorXd beta;
  double gamma0 = 0.0;
  Eigen::VectorXd gamma;

  static JglmCoefficients zeros(Eigen::Index feature_dim);
  Eigen::Index feature_dim() const { return alpha.size(); }
  void validate() const;
};

/// Maps a raw predictor vector onto the refined features fed to the links.
class FeatureTransform {
 public:
  virtual ~FeatureTransform() = default;
  virtual std::string name() const = 0;
  virtual Eigen::Index input_dim() const = 0;
  virtual Eigen::Index output_dim() const = 0;
  virtual Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;

  /// Applies the transform to every row.
  Eigen::MatrixXd apply_rows(const Eigen::Ref<const Eigen::MatrixXd>& rows) const;
};

class IdentityTransform final : public FeatureTransform {
 public:
  explicit IdentityTransform(Eigen::Index dim) : dim_(dim) {}
  std::string name() const override { return "identity"; }
  Eigen::Index input_dim() const override { return dim_; }
  Eigen::Index output_dim() const override { return dim_; }
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const override;

 private:
  Eigen::Index dim_;
};

/// z_k = (x_k - mean_k) / scale_k. Constant features get scale 1.
class StandardizeTransform final : public FeatureTransform {
 public:
  StandardizeTransform(Eigen::VectorXd mean, Eigen::VectorXd scale);
  static StandardizeTransform fit(const Eigen::Ref<const Eigen::MatrixXd>& rows);

  std::string name() const override { return "standardize"; }
  Eigen::Index input_dim() const override { return mean_.size(); }
  Eigen::Index output_dim() const override { return mean_.size(); }
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const override;

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& scale() const { return scale_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

/// Link inversion: p = logistic(alpha0 + <alpha,z>), mu = exp(beta0 +
/// <beta,z>), phi = exp(gamma0 + <gamma,z>). z are already-transformed
/// features.
GammaMixture jglm_predict(const Eigen::Ref<const Eigen::VectorXd>& features,
                          const JglmCoefficients& coeffs);

struct JglmFitConfig {
  double initial_step = 1.0;
  int max_iterations = 20000;
  double loss_tolerance = 1e-8;     // relative change of the mean loss
  double gradient_tolerance = 1e-9; // on the mean-loss gradient norm
  double armijo = 1e-4;
  double backtrack = 0.5;
};

struct JglmFitResult {
  JglmCoefficients coeffs;
  std::shared_ptr<const FeatureTransform> transform;
  bool converged = false;
  int iterations = 0;
  double initial_loss = 0.0;  // summed over observations
  double final_loss = 0.0;    // summed over observations
  double gradient_norm = 0.0; // of the mean loss at the returned point
  std::vector<double> loss_history;  // mean loss after each accepted step
};

/// Summed loss and its gradient (packed alpha0, alpha, beta0, beta, gamma0,
/// gamma) over transformed features `z` (rows) and rainfall `y`.
double jglm_loss(const Eigen::Ref<const Eigen::MatrixXd>& z,
                 std::span<const double> y, const JglmCoefficients& coeffs,
                 Eigen::VectorXd* gradient = nullptr);

/// Fits the coefficients by gradient descent with Barzilai-Borwein initial
/// steps and Armijo backtracking from all-zero coefficients. Every accepted
/// step lowers the loss. Hitting max_iterations leaves converged == false;
/// the coefficients are still returned.
///
/// Throws DomainError when the data holds no wet or no dry observation.
JglmFitResult jglm_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       std::span<const double> rain,
                       std::shared_ptr<const FeatureTransform> transform,
                       const JglmFitConfig& config = {});

/// Panel overload: feature rows follow observation_row ordering.
JglmFitResult jglm_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       const RainPanel& rain,
                       std::shared_ptr<const FeatureTransform> transform,
                       const JglmFitConfig& config = {});

/// Per-(location, day) marginal laws.
class MarginalField {
 public:
  MarginalField() = default;
  MarginalField(Eigen::Index n_locations, Eigen::Index n_days,
                const GammaMixture& fill = {});

  Eigen::Index n_locations() const { return n_locations_; }
  Eigen::Index n_days() const { return n_days_; }

  const GammaMixture& at(Eigen::Index location, Eigen::Index day) const {
    return cells_[static_cast<std::size_t>(day * n_locations_ + location)];
  }
  GammaMixture& at(Eigen::Index location, Eigen::Index day) {
    return cells_[static_cast<std::size_t>(day * n_locations_ + location)];
  }
  void validate() const;

 private:
  Eigen::Index n_locations_ = 0;
  Eigen::Index n_days_ = 0;
  std::vector<GammaMixture> cells_;
};

/// Evaluates the fitted model on every (location, day) of raw features.
MarginalField predict_field(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            Eigen::Index n_locations, Eigen::Index n_days,
                            const JglmCoefficients& coeffs,
                            const FeatureTransform& transform);

/// Flat key=value coefficient document.
void write_coefficients(std::ostream& out, const JglmCoefficients& coeffs,
                        const FeatureTransform& transform);

struct CoefficientDocument {
  JglmCoefficients coeffs;
  std::shared_ptr<const FeatureTransform> transform;
};

CoefficientDocument read_coefficients(std::istream& in,
                                      const std::string& source = "<stream>");

}  // namespace raincop
