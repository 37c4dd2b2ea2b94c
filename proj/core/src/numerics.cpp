#include "raincop/numerics.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "raincop/error.hpp"

namespace raincop::numerics {
namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(what) + ": argument must be finite");
  }
}

// Sum over k of (n+k)! / (k! (n-k)!) (2x)^{-k}, evaluated by the ratio of
// consecutive terms: t_{k+1} / t_k = (n+k+1)(n-k) / ((k+1) 2x).
double half_integer_series(int n, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 0; k < n; ++k) {
    term *= static_cast<double>((n + k + 1) * (n - k)) /
            (static_cast<double>(k + 1) * 2.0 * x);
    sum += term;
  }
  return sum;
}

void check_bessel_args(double nu, double x) {
  require_finite(nu, "bessel_k");
  require_finite(x, "bessel_k");
  if (!(nu > 0.0) || nu > 10.0) {
    throw DomainError("bessel_k: order must lie in (0, 10], got " +
                      std::to_string(nu));
  }
  if (!(x > 0.0)) {
    throw DomainError("bessel_k: argument must be positive");
  }
  if (x < kBesselMinArgument) {
    throw OverflowError("bessel_k: argument below underflow threshold " +
                        std::to_string(kBesselMinArgument));
  }
}

}  // namespace

double log_gamma(double x) {
  require_finite(x, "log_gamma");
  if (!(x > 0.0)) {
    throw DomainError("log_gamma: argument must be positive, got " +
                      std::to_string(x));
  }
  return boost::math::lgamma(x);
}

double digamma(double x) {
  require_finite(x, "digamma");
  if (!(x > 0.0)) throw DomainError("digamma: argument must be positive");
  return boost::math::digamma(x);
}

double reg_lower_inc_gamma(double shape, double x) {
  if (!(shape > 0.0) || !std::isfinite(shape) || !(x >= 0.0) || std::isnan(x)) {
    throw DomainError("reg_lower_inc_gamma: need shape > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(shape, x);
}

double reg_upper_inc_gamma(double shape, double x) {
  if (!(shape > 0.0) || !std::isfinite(shape) || !(x >= 0.0) || std::isnan(x)) {
    throw DomainError("reg_upper_inc_gamma: need shape > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(shape, x);
}

double inv_reg_lower_inc_gamma(double shape, double prob) {
  if (!(shape > 0.0) || !(prob >= 0.0) || !(prob < 1.0)) {
    throw DomainError("inv_reg_lower_inc_gamma: need shape > 0, prob in [0,1)");
  }
  if (prob == 0.0) return 0.0;
  return boost::math::gamma_p_inv(shape, prob);
}

double inv_reg_upper_inc_gamma(double shape, double prob) {
  if (!(shape > 0.0) || !(prob > 0.0) || !(prob <= 1.0)) {
    throw DomainError("inv_reg_upper_inc_gamma: need shape > 0, prob in (0,1]");
  }
  if (prob == 1.0) return 0.0;
  return boost::math::gamma_q_inv(shape, prob);
}

bool is_half_integer(double nu) {
  const double twice = 2.0 * nu;
  return nu > 0.0 && twice == std::floor(twice) &&
         static_cast<long long>(twice) % 2 == 1;
}

double bessel_k_scaled(double nu, double x) {
  check_bessel_args(nu, x);
  double value;
  if (is_half_integer(nu)) {
    const int n = static_cast<int>(nu - 0.5);
    value = std::sqrt(std::numbers::pi / (2.0 * x)) * half_integer_series(n, x);
  } else {
    value = std::exp(x) * std::cyl_bessel_k(nu, x);
  }
  if (!std::isfinite(value)) {
    throw OverflowError("bessel_k: result overflows at x=" + std::to_string(x));
  }
  return value;
}

double bessel_k(double nu, double x) {
  check_bessel_args(nu, x);
  double value;
  if (is_half_integer(nu)) {
    const int n = static_cast<int>(nu - 0.5);
    value = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) *
            half_integer_series(n, x);
  } else {
    value = std::cyl_bessel_k(nu, x);
  }
  if (!std::isfinite(value)) {
    throw OverflowError("bessel_k: result overflows at x=" + std::to_string(x));
  }
  return value;
}

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double x) {
  if (std::isnan(x)) throw DomainError("std_normal_cdf: NaN argument");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_quantile(double u) {
  if (std::isnan(u) || u <= 0.0 || u >= 1.0) {
    throw DomainError("std_normal_quantile: probability must lie in (0,1); "
                      "the endpoints map to infinite tails");
  }
  if (u == 0.5) return 0.0;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

SpdFactor spd_factorize(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw DomainError("spd_factorize: matrix must be square");
  }
  const Eigen::Index n = matrix.rows();
  if (n == 0) return SpdFactor(Eigen::MatrixXd(0, 0), 0.0);
  if (!matrix.allFinite()) {
    throw DomainError("spd_factorize: matrix has non-finite entries");
  }
  const double scale = matrix.cwiseAbs().maxCoeff();
  const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0)) {
    throw DomainError("spd_factorize: matrix is not symmetric (max asymmetry " +
                      std::to_string(asym) + ")");
  }

  Eigen::MatrixXd work = matrix;
  double jitter = 0.0;
  for (;;) {
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      Eigen::MatrixXd lower = llt.matrixL();
      if ((lower.diagonal().array() > 0.0).all()) {
        return SpdFactor(std::move(lower), jitter);
      }
    }
    const double next = jitter == 0.0 ? kJitterStart : jitter * 10.0;
    if (next > kJitterCeiling * (1.0 + 1e-9)) break;
    work.diagonal().array() += next - jitter;
    jitter = next;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(matrix,
                                                     Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  throw NotPositiveDefinite(
      "spd_factorize: matrix is not positive definite within the jitter "
      "ceiling 1e-6 (smallest eigenvalue " + std::to_string(min_eig) + ")",
      min_eig);
}

}  // namespace raincop::numerics
