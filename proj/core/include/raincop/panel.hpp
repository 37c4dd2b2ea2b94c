#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

namespace raincop {

/// Observed rainfall, n locations by T days, in millimetres. Dry days are
/// stored as exact zeros.
struct RainPanel {
  Eigen::MatrixXd values;                 // (location, day)
  std::vector<std::string> day_labels;    // ISO-8601 dates, length T
  std::vector<std::string> location_ids;  // length n

  Eigen::Index n_locations() const { return values.rows(); }
  Eigen::Index n_days() const { return values.cols(); }

  /// Throws DomainError on negative or non-finite cells, or when the label
  /// vectors disagree with the matrix shape.
  void validate() const;
};

/// Row of the flattened (n*T) x d feature matrix holding (location, day).
/// Rows are ordered day-major: all locations of day 0, then day 1, ...
inline Eigen::Index observation_row(Eigen::Index location, Eigen::Index day,
                                    Eigen::Index n_locations) {
  return day * n_locations + location;
}

/// Consecutive ISO dates starting at `start` (YYYY-MM-DD).
std::vector<std::string> consecutive_dates(const std::string& start,
                                           std::size_t count);

}  // namespace raincop
