#pragma once

#include <Eigen/Core>

namespace raincop::numerics {

/// Natural log of the gamma function. Throws DomainError for x <= 0.
double log_gamma(double x);

/// Digamma function psi(x) = d/dx log Gamma(x), x > 0.
double digamma(double x);

/// Regularized lower incomplete gamma P(shape, x).
double reg_lower_inc_gamma(double shape, double x);

/// Regularized upper incomplete gamma Q(shape, x) = 1 - P(shape, x),
/// evaluated without cancellation.
double reg_upper_inc_gamma(double shape, double x);

/// Inverse of P(shape, .) for a probability in [0, 1).
double inv_reg_lower_inc_gamma(double shape, double prob);

/// Inverse of Q(shape, .) for a probability in (0, 1].
double inv_reg_upper_inc_gamma(double shape, double prob);

/// Arguments below this value are rejected by bessel_k with OverflowError.
inline constexpr double kBesselMinArgument = 1e-280;

/// Modified Bessel function of the second kind K_nu(x), nu in (0, 10].
///
/// Half-integer orders use the terminating closed form
///   K_{n+1/2}(x) = sqrt(pi / 2x) e^{-x} sum_k (n+k)! / (k! (n-k)!) (2x)^{-k}
/// and other orders defer to the standard library. Throws OverflowError when
/// x < kBesselMinArgument or the value is not finite.
double bessel_k(double nu, double x);

/// exp(x) * K_nu(x); stays finite for large x where K_nu underflows.
double bessel_k_scaled(double nu, double x);

/// True when nu is n + 1/2 for an integer n >= 0.
bool is_half_integer(double nu);

double std_normal_pdf(double x);
double std_normal_cdf(double x);

/// Inverse of std_normal_cdf on (0, 1). Throws DomainError at the endpoints.
double std_normal_quantile(double u);

/// Cholesky factor of a symmetric positive-definite matrix.
class SpdFactor {
 public:
  SpdFactor(Eigen::MatrixXd lower, double jitter_applied)
      : lower_(std::move(lower)), jitter_applied_(jitter_applied) {}

  const Eigen::MatrixXd& lower() const { return lower_; }
  double jitter_applied() const { return jitter_applied_; }
  Eigen::Index size() const { return lower_.rows(); }

 private:
  Eigen::MatrixXd lower_;
  double jitter_applied_;
};

inline constexpr double kJitterStart = 1e-10;
inline constexpr double kJitterCeiling = 1e-6;

/// Cholesky factorization with escalating diagonal jitter.
///
/// The plain factorization is tried first. On failure a jitter of 1e-10 is
/// added to the diagonal and multiplied by ten until the factorization
/// succeeds or 1e-6 has been tried, at which point NotPositiveDefinite is
/// thrown carrying the smallest eigenvalue of the input. The input must be
/// symmetric to 1e-12 relative to its largest entry.
SpdFactor spd_factorize(const Eigen::MatrixXd& matrix);

}  // namespace raincop::numerics
