#include "raincop/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "raincop/error.hpp"
#include "raincop/estimation.hpp"
#include "raincop/numerics.hpp"
#include "raincop/rng.hpp"

namespace raincop {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_blocks(const std::vector<EnsembleBlock>& blocks) {
  if (blocks.empty()) throw DomainError("diagnostics: no ensemble blocks");
  for (const auto& b : blocks) b.validate();
  const Eigen::Index n = blocks.front().n_locations();
  const Eigen::Index m = blocks.front().members();
  for (const auto& b : blocks) {
    if (b.n_locations() != n || b.members() != m) {
      throw DomainError("diagnostics: blocks differ in shape");
    }
  }
}

}  // namespace

void EnsembleBlock::validate() const {
  if (samples.rows() < 2) throw DomainError("EnsembleBlock: need m >= 2");
  if (samples.cols() != obs.size()) {
    throw DomainError("EnsembleBlock: samples and obs differ in width");
  }
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0; };
  if (samples.unaryExpr(bad).any() || obs.unaryExpr(bad).any()) {
    throw DomainError("EnsembleBlock: values must be finite and nonnegative");
  }
}

std::vector<double> uniform_tau_grid(std::size_t n) {
  if (n < 2) throw DomainError("uniform_tau_grid: need at least two points");
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    grid[i] = static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return grid;
}

double trapezoid_auc(const std::vector<RocPoint>& points) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].fpr - points[i - 1].fpr) *
            (points[i].tpr + points[i - 1].tpr) / 2.0;
  }
  return area;
}

RocCurve roc_from_scores(const std::vector<double>& scores,
                         const std::vector<bool>& events,
                         const std::vector<double>& tau_grid) {
  if (scores.size() != events.size()) {
    throw DomainError("roc_from_scores: scores and events differ in length");
  }
  RocCurve curve;
  for (bool e : events) (e ? curve.events : curve.non_events)++;

  std::vector<double> taus = tau_grid;
  if (taus.empty()) {
    taus = scores;
    // Thresholds just below each distinct score make that score a signal.
    for (double& t : taus) t = std::nextafter(t, -kInf);
  }
  std::sort(taus.begin(), taus.end(), std::greater<>());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());

  // Sorted scores let each threshold be answered by a count.
  std::vector<double> pos_scores;
  std::vector<double> neg_scores;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    (events[i] ? pos_scores : neg_scores).push_back(scores[i]);
  }
  std::sort(pos_scores.begin(), pos_scores.end());
  std::sort(neg_scores.begin(), neg_scores.end());
  auto above = [](const std::vector<double>& v, double t) {
    return static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), t));
  };
  const double np = static_cast<double>(curve.events);
  const double nn = static_cast<double>(curve.non_events);

  curve.points.push_back({kInf, 0.0, 0.0});
  for (double t : taus) {
    RocPoint pt{t, nn > 0 ? above(neg_scores, t) / nn : 0.0,
                np > 0 ? above(pos_scores, t) / np : 0.0};
    curve.points.push_back(pt);
  }
  curve.points.push_back({-kInf, 1.0, 1.0});
  if (curve.events > 0 && curve.non_events > 0) {
    curve.auc = trapezoid_auc(curve.points);
  }
  return curve;
}

RocCurve roc_auc(const MarginalField& field, const RainPanel& obs, double q,
                 const std::vector<double>& tau_grid) {
  if (!(q >= 0.0)) throw DomainError("roc_auc: q must be nonnegative");
  if (field.n_locations() != obs.n_locations() || field.n_days() != obs.n_days()) {
    throw DomainError("roc_auc: field and panel shapes differ");
  }
  std::vector<double> scores;
  std::vector<bool> events;
  scores.reserve(static_cast<std::size_t>(obs.values.size()));
  events.reserve(static_cast<std::size_t>(obs.values.size()));
  for (Eigen::Index t = 0; t < obs.n_days(); ++t) {
    for (Eigen::Index i = 0; i < obs.n_locations(); ++i) {
      scores.push_back(1.0 - gm_cdf(field.at(i, t), q));
      events.push_back(obs.values(i, t) > q);
    }
  }
  RocCurve curve = roc_from_scores(scores, events, tau_grid);
  curve.q = q;
  return curve;
}

RankHistogram rank_histogram(const std::vector<EnsembleBlock>& blocks,
                             std::size_t bins, std::uint64_t seed) {
  require_blocks(blocks);
  const auto m = static_cast<std::size_t>(blocks.front().members());
  const std::size_t ranks = m + 1;
  if (bins == 0) bins = ranks;
  if (bins > ranks) throw DomainError("rank_histogram: more bins than ranks");

  std::vector<std::size_t> bin_of(ranks);
  std::vector<double> ranks_per_bin(bins, 0.0);
  for (std::size_t r = 0; r < ranks; ++r) {
    bin_of[r] = r * bins / ranks;
    ranks_per_bin[bin_of[r]] += 1.0;
  }

  RankHistogram h;
  h.counts.assign(bins, 0);
  std::uint64_t total = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const EnsembleBlock& block = blocks[b];
    for (Eigen::Index i = 0; i < block.n_locations(); ++i) {
      const double y = block.obs(i);
      std::uint64_t below = 0;
      std::uint64_t ties = 0;
      for (Eigen::Index j = 0; j < block.members(); ++j) {
        const double x = block.samples(j, i);
        if (x < y) ++below;
        else if (x == y) ++ties;
      }
      std::uint64_t rank = below;
      if (ties > 0) {
        Stream s(seed, StreamTag::kRankTies, b, static_cast<std::uint64_t>(i));
        rank += s.below(ties + 1);
      }
      ++h.counts[bin_of[rank]];
      ++total;
    }
  }
  h.expected.resize(bins);
  h.frequencies.resize(bins);
  const double nt = static_cast<double>(total);
  for (std::size_t b = 0; b < bins; ++b) {
    h.expected[b] = nt * ranks_per_bin[b] / static_cast<double>(ranks);
    h.frequencies[b] = static_cast<double>(h.counts[b]) / nt;
    const double diff = static_cast<double>(h.counts[b]) - h.expected[b];
    h.chi_square += diff * diff / h.expected[b];
  }
  h.dof = static_cast<int>(bins) - 1;
  h.p_value = h.dof > 0
                  ? numerics::reg_upper_inc_gamma(h.dof / 2.0, h.chi_square / 2.0)
                  : 1.0;
  return h;
}

std::vector<EcdfPoint> ecdf_curve(const std::vector<EnsembleBlock>& blocks,
                                  const std::vector<double>& levels) {
  require_blocks(blocks);
  for (double x : levels) {
    if (!(x >= 0.0)) throw DomainError("ecdf_curve: levels must be nonnegative");
  }
  std::vector<EcdfPoint> out;
  out.reserve(levels.size());
  for (double x : levels) {
    std::uint64_t model = 0;
    std::uint64_t observed = 0;
    std::uint64_t members = 0;
    std::uint64_t cells = 0;
    for (const auto& b : blocks) {
      model += static_cast<std::uint64_t>((b.samples.array() > x).count());
      observed += static_cast<std::uint64_t>((b.obs.array() > x).count());
      members += static_cast<std::uint64_t>(b.samples.size());
      cells += static_cast<std::uint64_t>(b.obs.size());
    }
    out.push_back({x, static_cast<double>(model) / static_cast<double>(members),
                   static_cast<double>(observed) / static_cast<double>(cells)});
  }
  return out;
}

Eigen::Index center_of_mass(const LocationTable& locs) {
  if (locs.size() == 0) throw DomainError("center_of_mass: no locations");
  double lat = 0.0;
  double lon = 0.0;
  for (const auto& l : locs.rows) {
    lat += l.lat;
    lon += l.lon;
  }
  lat /= static_cast<double>(locs.size());
  lon /= static_cast<double>(locs.size());
  Eigen::Index best = 0;
  double best_d = kInf;
  for (std::size_t i = 0; i < locs.size(); ++i) {
    const double d = std::hypot(locs.rows[i].lat - lat, locs.rows[i].lon - lon);
    if (d < best_d) {
      best_d = d;
      best = static_cast<Eigen::Index>(i);
    }
  }
  return best;
}

CrossCorrelation cross_correlation(const Eigen::Ref<const Eigen::MatrixXd>& panel,
                                   const LocationTable& locs,
                                   const std::string& center) {
  if (panel.rows() != static_cast<Eigen::Index>(locs.size())) {
    throw DomainError("cross_correlation: panel rows differ from locations");
  }
  if (panel.cols() < 3) throw DomainError("cross_correlation: need T >= 3");
  CrossCorrelation out;
  if (center.empty()) {
    out.center = center_of_mass(locs);
  } else {
    const auto it = std::find_if(locs.rows.begin(), locs.rows.end(),
                                 [&](const Location& l) { return l.id == center; });
    if (it == locs.rows.end()) {
      throw DomainError("cross_correlation: unknown centre id '" + center + "'");
    }
    out.center = it - locs.rows.begin();
  }
  out.center_id = locs.rows[static_cast<std::size_t>(out.center)].id;

  const Eigen::VectorXd c = panel.row(out.center).transpose();
  const Eigen::VectorXd cc = c.array() - c.mean();
  const double c_ss = cc.squaredNorm();
  out.correlation.resize(static_cast<std::size_t>(panel.rows()));
  for (Eigen::Index i = 0; i < panel.rows(); ++i) {
    const Eigen::VectorXd x = panel.row(i).transpose();
    const Eigen::VectorXd xc = x.array() - x.mean();
    const double x_ss = xc.squaredNorm();
    if (c_ss == 0.0 || x_ss == 0.0) continue;
    out.correlation[static_cast<std::size_t>(i)] =
        i == out.center ? 1.0 : xc.dot(cc) / std::sqrt(x_ss * c_ss);
  }
  return out;
}

double crps_sample(const std::vector<double>& samples, double y) {
  const std::size_t m = samples.size();
  if (m < 2) throw DomainError("crps_sample: need m >= 2");
  std::vector<double> x = samples;
  std::sort(x.begin(), x.end());
  // Mean absolute error shifted by its first term, so a point forecast
  // returns |x - y| exactly.
  const double shift = std::abs(x[0] - y);
  double to_obs = 0.0;
  // sum_{j<k} (x_(k) - x_(j)) written over consecutive gaps; never negative.
  double spread = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    to_obs += std::abs(x[i] - y) - shift;
    if (i + 1 < m) {
      spread += (x[i + 1] - x[i]) * static_cast<double>((i + 1) * (m - 1 - i));
    }
  }
  const double md = static_cast<double>(m);
  return shift + to_obs / md - spread / (md * (md - 1.0));
}

double crps_mean(const std::vector<EnsembleBlock>& blocks) {
  require_blocks(blocks);
  double sum = 0.0;
  std::size_t cells = 0;
  std::vector<double> column;
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.n_locations(); ++i) {
      column.assign(b.samples.col(i).data(),
                    b.samples.col(i).data() + b.members());
      sum += crps_sample(column, b.obs(i));
      ++cells;
    }
  }
  return sum / static_cast<double>(cells);
}

VariogramScore variogram_score(const EnsembleBlock& block,
                               const DistanceMatrix& distance, double p) {
  block.validate();
  if (!(p > 0.0)) throw DomainError("variogram_score: exponent must be positive");
  const Eigen::Index n = block.n_locations();
  if (distance.size() != n) {
    throw DomainError("variogram_score: distance matrix size differs from block");
  }
  const Eigen::Index m = block.members();
  VariogramScore out;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index l = 0; l < n; ++l) {
      if (k == l) continue;
      const double d = distance.values(k, l);
      if (d == 0.0) {
        ++out.zero_distance_pairs;
        continue;
      }
      double model = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        model += std::pow(std::abs(block.samples(j, k) - block.samples(j, l)), p);
      }
      model /= static_cast<double>(m);
      const double r = std::pow(std::abs(block.obs(k) - block.obs(l)), p) - model;
      out.value += r * r / d;
    }
  }
  return out;
}

VariogramSummary variogram_summary(const std::vector<EnsembleBlock>& blocks,
                                   const DistanceMatrix& distance, double p) {
  require_blocks(blocks);
  VariogramSummary s;
  for (const auto& b : blocks) {
    const VariogramScore v = variogram_score(b, distance, p);
    s.per_day.push_back(v.value);
    s.sum += v.value;
    s.zero_distance_pairs = v.zero_distance_pairs;
  }
  s.mean = s.sum / static_cast<double>(blocks.size());
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DomainError("median: empty input");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(values.begin(), mid);
  return lower + (upper - lower) / 2.0;
}

BiasSummary rmsb_mab(const std::vector<EnsembleBlock>& blocks) {
  require_blocks(blocks);
  double sq = 0.0;
  double abs_sum = 0.0;
  std::size_t cells = 0;
  std::vector<double> column;
  for (const auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.n_locations(); ++i) {
      column.assign(b.samples.col(i).data(),
                    b.samples.col(i).data() + b.members());
      const double e = b.obs(i) - median(column);
      sq += e * e;
      abs_sum += std::abs(e);
      ++cells;
    }
  }
  const double n = static_cast<double>(cells);
  return {std::sqrt(sq / n), abs_sum / n};
}

std::vector<double> energy_scores(const std::vector<EnsembleBlock>& blocks,
                                  double beta) {
  require_blocks(blocks);
  std::vector<double> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) {
    out.push_back(energy_score_unbiased(b.samples, b.obs, beta));
  }
  return out;
}

}  // namespace raincop
