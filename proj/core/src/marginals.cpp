#include "raincop/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "raincop/error.hpp"
#include "raincop/numerics.hpp"
#include "raincop/text.hpp"

namespace raincop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Positive gamma quantile for a wet outcome given the conditional lower tail
// probability v and its complement w = 1 - v, whichever is more accurate.
double wet_quantile(const GammaMixture& law, double v, double w) {
  constexpr double kTiny = 1e-300;
  double y;
  if (v <= 0.5) {
    y = numerics::inv_reg_lower_inc_gamma(law.shape(), std::max(v, kTiny));
  } else {
    y = numerics::inv_reg_upper_inc_gamma(law.shape(),
                                          std::clamp(w, kTiny, 1.0));
  }
  return y * law.scale();
}

}  // namespace

void GammaMixture::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("GammaMixture: p must lie in [0,1]");
  }
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw DomainError("GammaMixture: mu must be positive and finite");
  }
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw DomainError("GammaMixture: phi must be positive and finite");
  }
}

double gm_cdf(const GammaMixture& law, double y) {
  if (std::isnan(y) || y < 0.0) {
    throw DomainError("gm_cdf: rainfall must be non-negative");
  }
  const double dry = 1.0 - law.p;
  if (y == 0.0) return dry;
  return dry + law.p * numerics::reg_lower_inc_gamma(law.shape(), y / law.scale());
}

double gm_density(const GammaMixture& law, double y) {
  if (!(y > 0.0)) throw DomainError("gm_density: y must be positive");
  const double k = law.shape();
  const double z = y / law.scale();
  const double log_f =
      k * std::log(z) - std::log(y) - z - numerics::log_gamma(k);
  return law.p * std::exp(log_f);
}

double latent_threshold(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("latent_threshold: p must lie in [0,1]");
  }
  if (p == 0.0) return kInf;
  if (p == 1.0) return -kInf;
  return numerics::std_normal_quantile(1.0 - p);
}

double gm_quantile(const GammaMixture& law, double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("gm_quantile: probability must lie in (0,1)");
  }
  const double dry = 1.0 - law.p;
  if (u <= dry) return 0.0;
  return wet_quantile(law, (u - dry) / law.p, (1.0 - u) / law.p);
}

double gm_quantile_from_gaussian(const GammaMixture& law, double x) {
  if (std::isnan(x)) throw DomainError("gm_quantile_from_gaussian: NaN input");
  if (x <= latent_threshold(law.p)) return 0.0;
  const double dry = 1.0 - law.p;
  if (x <= 0.0) {
    const double u = numerics::std_normal_cdf(x);
    const double v = (u - dry) / law.p;
    return wet_quantile(law, v, 1.0 - v);
  }
  const double upper = numerics::std_normal_cdf(-x);
  const double w = upper / law.p;
  return wet_quantile(law, 1.0 - w, w);
}

double gm_sample(const GammaMixture& law, Stream& stream) {
  return gm_quantile(law, stream.uniform());
}

double logistic_loss(double p, double y) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) {
    throw DomainError("logistic_loss: p must lie in [0,1]");
  }
  if (std::isnan(y) || y < 0.0) {
    throw DomainError("logistic_loss: rainfall must be non-negative");
  }
  const double q = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
  return y > 0.0 ? -std::log(q) : -std::log1p(-q);
}

double gamma_nll(double mu, double phi, double y) {
  if (!(mu > 0.0) || !(phi > 0.0) || !std::isfinite(mu) || !std::isfinite(phi)) {
    throw DomainError("gamma_nll: mu and phi must be positive and finite");
  }
  if (!(y > 0.0) || !std::isfinite(y)) {
    throw DomainError("gamma_nll: y must be positive");
  }
  const double k = 1.0 / phi;
  const double z = y / (phi * mu);
  return -k * std::log(z) + std::log(y) + z + numerics::log_gamma(k);
}

double observation_loss(const GammaMixture& law, double y) {
  double loss = logistic_loss(law.p, y);
  if (y > 0.0) loss += gamma_nll(law.mu, law.phi, y);
  return loss;
}

JglmCoefficients JglmCoefficients::zeros(Eigen::Index feature_dim) {
  JglmCoefficients c;
  c.alpha = Eigen::VectorXd::Zero(feature_dim);
  c.beta = Eigen::VectorXd::Zero(feature_dim);
  c.gamma = Eigen::VectorXd::Zero(feature_dim);
  return c;
}

void JglmCoefficients::validate() const {
  if (alpha.size() != beta.size() || alpha.size() != gamma.size()) {
    throw DomainError("JglmCoefficients: feature dimensions differ");
  }
  if (!std::isfinite(alpha0) || !std::isfinite(beta0) ||
      !std::isfinite(gamma0) || !alpha.allFinite() || !beta.allFinite() ||
      !gamma.allFinite()) {
    throw DomainError("JglmCoefficients: non-finite coefficient");
  }
}

Eigen::MatrixXd FeatureTransform::apply_rows(
    const Eigen::Ref<const Eigen::MatrixXd>& rows) const {
  if (rows.cols() != input_dim()) {
    throw DomainError("FeatureTransform: expected " +
                      std::to_string(input_dim()) + " features, got " +
                      std::to_string(rows.cols()));
  }
  Eigen::MatrixXd out(rows.rows(), output_dim());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    out.row(r) = apply(rows.row(r).transpose()).transpose();
  }
  return out;
}

Eigen::VectorXd IdentityTransform::apply(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim_) throw DomainError("IdentityTransform: dimension mismatch");
  return x;
}

StandardizeTransform::StandardizeTransform(Eigen::VectorXd mean,
                                           Eigen::VectorXd scale)
    : mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.size() != scale_.size()) {
    throw DomainError("StandardizeTransform: mean/scale size mismatch");
  }
  if (!mean_.allFinite() || !scale_.allFinite() ||
      (scale_.array() <= 0.0).any()) {
    throw DomainError("StandardizeTransform: scales must be positive");
  }
}

StandardizeTransform StandardizeTransform::fit(
    const Eigen::Ref<const Eigen::MatrixXd>& rows) {
  if (rows.rows() == 0) throw DomainError("StandardizeTransform: no rows");
  const Eigen::VectorXd mean = rows.colwise().mean().transpose();
  Eigen::VectorXd scale(rows.cols());
  for (Eigen::Index k = 0; k < rows.cols(); ++k) {
    const double var =
        (rows.col(k).array() - mean(k)).square().sum() / double(rows.rows());
    scale(k) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return StandardizeTransform(mean, scale);
}

Eigen::VectorXd StandardizeTransform::apply(
    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != mean_.size()) {
    throw DomainError("StandardizeTransform: dimension mismatch");
  }
  return (x - mean_).cwiseQuotient(scale_);
}

GammaMixture jglm_predict(const Eigen::Ref<const Eigen::VectorXd>& features,
                          const JglmCoefficients& coeffs) {
  if (features.size() != coeffs.feature_dim()) {
    throw DomainError("jglm_predict: feature dimension " +
                      std::to_string(features.size()) + " != coefficient dimension " +
                      std::to_string(coeffs.feature_dim()));
  }
  const double eta_p = coeffs.alpha0 + coeffs.alpha.dot(features);
  const double eta_mu = coeffs.beta0 + coeffs.beta.dot(features);
  const double eta_phi = coeffs.gamma0 + coeffs.gamma.dot(features);
  if (!std::isfinite(eta_p) || !std::isfinite(eta_mu) || !std::isfinite(eta_phi)) {
    throw DomainError("jglm_predict: non-finite linear predictor");
  }
  GammaMixture law{logistic(eta_p), std::exp(eta_mu), std::exp(eta_phi)};
  if (!(law.mu > 0.0) || !std::isfinite(law.mu) || !(law.phi > 0.0) ||
      !std::isfinite(law.phi)) {
    throw DomainError("jglm_predict: link output out of range");
  }
  return law;
}

namespace {

Eigen::Index packed_size(Eigen::Index d) { return 3 * (d + 1); }

JglmCoefficients unpack(const Eigen::VectorXd& v, Eigen::Index d) {
  JglmCoefficients c;
  c.alpha0 = v(0);
  c.alpha = v.segment(1, d);
  c.beta0 = v(d + 1);
  c.beta = v.segment(d + 2, d);
  c.gamma0 = v(2 * d + 2);
  c.gamma = v.segment(2 * d + 3, d);
  return c;
}

// Loss terms that return +inf instead of throwing when the optimizer probes
// a point where the links leave their domain.
double safe_lgamma(double k) {
  if (!(k > 0.0) || !std::isfinite(k)) return kInf;
  return numerics::log_gamma(k);
}

}  // namespace

double jglm_loss(const Eigen::Ref<const Eigen::MatrixXd>& z,
                 std::span<const double> y, const JglmCoefficients& coeffs,
                 Eigen::VectorXd* gradient) {
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  if (static_cast<std::size_t>(n) != y.size()) {
    throw DomainError("jglm_loss: feature rows and observations differ");
  }
  if (d != coeffs.feature_dim()) {
    throw DomainError("jglm_loss: feature dimension mismatch");
  }
  if (gradient) gradient->setZero(packed_size(d));

  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = z.row(r);
    const double eta_p = coeffs.alpha0 + row.dot(coeffs.alpha);
    const double p = logistic(eta_p);
    const double obs = y[static_cast<std::size_t>(r)];
    const bool wet = obs > 0.0;
    const double q = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
    total += wet ? -std::log(q) : -std::log1p(-q);

    double g_p = p - (wet ? 1.0 : 0.0);
    double g_mu = 0.0;
    double g_phi = 0.0;
    if (wet) {
      const double eta_mu = coeffs.beta0 + row.dot(coeffs.beta);
      const double eta_phi = coeffs.gamma0 + row.dot(coeffs.gamma);
      const double mu = std::exp(eta_mu);
      const double phi = std::exp(eta_phi);
      const double k = 1.0 / phi;
      const double lg = safe_lgamma(k);
      if (!std::isfinite(lg) || !(mu > 0.0) || !std::isfinite(mu)) {
        total = kInf;
        continue;
      }
      const double log_z = std::log(obs) - eta_phi - eta_mu;
      const double ratio = obs / mu;
      total += -k * log_z + std::log(obs) + k * ratio + lg;
      if (gradient) {
        g_mu = k * (1.0 - ratio);
        g_phi = -k * (numerics::digamma(k) - log_z - 1.0 + ratio);
      }
    }
    if (gradient) {
      auto& g = *gradient;
      g(0) += g_p;
      g.segment(1, d) += g_p * row.transpose();
      if (wet) {
        g(d + 1) += g_mu;
        g.segment(d + 2, d) += g_mu * row.transpose();
        g(2 * d + 2) += g_phi;
        g.segment(2 * d + 3, d) += g_phi * row.transpose();
      }
    }
  }
  return total;
}

JglmFitResult jglm_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       std::span<const double> rain,
                       std::shared_ptr<const FeatureTransform> transform,
                       const JglmFitConfig& config) {
  if (!transform) throw DomainError("jglm_fit: missing feature transform");
  if (static_cast<std::size_t>(features.rows()) != rain.size()) {
    throw DomainError("jglm_fit: " + std::to_string(features.rows()) +
                      " feature rows for " + std::to_string(rain.size()) +
                      " observations");
  }
  std::size_t wet = 0;
  std::size_t dry = 0;
  for (double y : rain) {
    if (!std::isfinite(y) || y < 0.0) {
      throw DomainError("jglm_fit: rainfall must be finite and non-negative");
    }
    (y > 0.0 ? wet : dry) += 1;
  }
  if (wet == 0 || dry == 0) {
    throw DomainError("jglm_fit: need at least one wet and one dry observation");
  }
  if (!features.allFinite()) throw DomainError("jglm_fit: non-finite feature");

  const Eigen::MatrixXd z = transform->apply_rows(features);
  const Eigen::Index d = z.cols();
  const double count = static_cast<double>(rain.size());

  auto mean_loss = [&](const Eigen::VectorXd& v, Eigen::VectorXd* grad) {
    const double total = jglm_loss(z, rain, unpack(v, d), grad);
    if (grad) *grad /= count;
    return total / count;
  };

  JglmFitResult result;
  result.transform = transform;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(packed_size(d));
  Eigen::VectorXd g;
  double loss = mean_loss(x, &g);
  result.initial_loss = loss * count;

  double step = config.initial_step;
  Eigen::VectorXd x_prev;
  Eigen::VectorXd g_prev;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    const double gnorm2 = g.squaredNorm();
    if (std::sqrt(gnorm2) <= config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (it > 0) {
      const Eigen::VectorXd s = x - x_prev;
      const Eigen::VectorXd yk = g - g_prev;
      const double sy = s.dot(yk);
      step = sy > 0.0 ? s.squaredNorm() / sy : config.initial_step;
    }
    Eigen::VectorXd candidate;
    Eigen::VectorXd g_new;
    double loss_new = kInf;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      candidate = x - step * g;
      loss_new = mean_loss(candidate, &g_new);
      if (loss_new <= loss - config.armijo * step * gnorm2) {
        accepted = true;
        break;
      }
      step *= config.backtrack;
    }
    if (!accepted) break;

    x_prev = std::move(x);
    g_prev = std::move(g);
    x = std::move(candidate);
    g = std::move(g_new);
    const double rel = std::abs(loss - loss_new) / std::max(std::abs(loss), 1e-300);
    loss = loss_new;
    result.loss_history.push_back(loss);
    if (rel <= config.loss_tolerance) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.iterations = it;
  result.coeffs = unpack(x, d);
  result.final_loss = loss * count;
  result.gradient_norm = g.norm();
  return result;
}

JglmFitResult jglm_fit(const Eigen::Ref<const Eigen::MatrixXd>& features,
                       const RainPanel& rain,
                       std::shared_ptr<const FeatureTransform> transform,
                       const JglmFitConfig& config) {
  const Eigen::Index n = rain.n_locations();
  const Eigen::Index t_count = rain.n_days();
  std::vector<double> flat(static_cast<std::size_t>(n * t_count));
  for (Eigen::Index t = 0; t < t_count; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      flat[static_cast<std::size_t>(observation_row(i, t, n))] = rain.values(i, t);
    }
  }
  return jglm_fit(features, std::span<const double>(flat), std::move(transform),
                  config);
}

MarginalField::MarginalField(Eigen::Index n_locations, Eigen::Index n_days,
                             const GammaMixture& fill)
    : n_locations_(n_locations),
      n_days_(n_days),
      cells_(static_cast<std::size_t>(n_locations * n_days), fill) {}

void MarginalField::validate() const {
  for (const auto& cell : cells_) cell.validate();
}

MarginalField predict_field(const Eigen::Ref<const Eigen::MatrixXd>& features,
                            Eigen::Index n_locations, Eigen::Index n_days,
                            const JglmCoefficients& coeffs,
                            const FeatureTransform& transform) {
  if (features.rows() != n_locations * n_days) {
    throw DomainError("predict_field: expected " +
                      std::to_string(n_locations * n_days) + " feature rows");
  }
  MarginalField field(n_locations, n_days);
  for (Eigen::Index t = 0; t < n_days; ++t) {
    for (Eigen::Index i = 0; i < n_locations; ++i) {
      const auto row = features.row(observation_row(i, t, n_locations)).transpose();
      field.at(i, t) = jglm_predict(transform.apply(row), coeffs);
    }
  }
  return field;
}

void write_coefficients(std::ostream& out, const JglmCoefficients& coeffs,
                        const FeatureTransform& transform) {
  using text::format_double;
  const Eigen::Index d = coeffs.feature_dim();
  out << "feature_dim=" << d << '\n';
  out << "transform=" << transform.name() << '\n';
  auto vec = [&](const char* name, double intercept, const Eigen::VectorXd& v) {
    out << name << "0=" << format_double(intercept) << '\n';
    for (Eigen::Index k = 0; k < d; ++k) {
      out << name << '.' << k << '=' << format_double(v(k)) << '\n';
    }
  };
  vec("alpha", coeffs.alpha0, coeffs.alpha);
  vec("beta", coeffs.beta0, coeffs.beta);
  vec("gamma", coeffs.gamma0, coeffs.gamma);
  if (const auto* st = dynamic_cast<const StandardizeTransform*>(&transform)) {
    for (Eigen::Index k = 0; k < d; ++k) {
      out << "mean." << k << '=' << format_double(st->mean()(k)) << '\n';
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      out << "scale." << k << '=' << format_double(st->scale()(k)) << '\n';
    }
  }
}

CoefficientDocument read_coefficients(std::istream& in,
                                      const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw IngestionError(source + ":" + std::to_string(line_no) +
                           ": expected key=value");
    }
    kv[std::string(text::trim(body.substr(0, eq)))] =
        std::string(text::trim(body.substr(eq + 1)));
  }
  auto number = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) {
      throw IngestionError(source + ": missing key '" + key + "'");
    }
    const auto v = text::parse_double(it->second);
    if (!v || !std::isfinite(*v)) {
      throw IngestionError(source + ": key '" + key + "' is not a finite number");
    }
    return *v;
  };
  const double dim_value = number("feature_dim");
  if (dim_value < 0 || dim_value != std::floor(dim_value)) {
    throw IngestionError(source + ": feature_dim must be a non-negative integer");
  }
  const auto d = static_cast<Eigen::Index>(dim_value);
  CoefficientDocument doc;
  doc.coeffs = JglmCoefficients::zeros(d);
  doc.coeffs.alpha0 = number("alpha0");
  doc.coeffs.beta0 = number("beta0");
  doc.coeffs.gamma0 = number("gamma0");
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto idx = std::to_string(k);
    doc.coeffs.alpha(k) = number("alpha." + idx);
    doc.coeffs.beta(k) = number("beta." + idx);
    doc.coeffs.gamma(k) = number("gamma." + idx);
  }
  const auto t = kv.find("transform");
  const std::string name = t == kv.end() ? "identity" : t->second;
  if (name == "identity") {
    doc.transform = std::make_shared<IdentityTransform>(d);
  } else if (name == "standardize") {
    Eigen::VectorXd mean(d);
    Eigen::VectorXd scale(d);
    for (Eigen::Index k = 0; k < d; ++k) {
      mean(k) = number("mean." + std::to_string(k));
      scale(k) = number("scale." + std::to_string(k));
    }
    doc.transform = std::make_shared<StandardizeTransform>(mean, scale);
  } else {
    throw IngestionError(source + ": unknown transform '" + name + "'");
  }
  return doc;
}

}  // namespace raincop
