#include "raincop/panel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "raincop/error.hpp"

namespace raincop {

void RainPanel::validate() const {
  if (static_cast<Eigen::Index>(location_ids.size()) != values.rows()) {
    throw DomainError("RainPanel: location id count does not match rows");
  }
  if (static_cast<Eigen::Index>(day_labels.size()) != values.cols()) {
    throw DomainError("RainPanel: day label count does not match columns");
  }
  for (Eigen::Index t = 0; t < values.cols(); ++t) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const double y = values(i, t);
      if (!std::isfinite(y) || y < 0.0) {
        throw DomainError("RainPanel: invalid rainfall at location " +
                          location_ids[i] + ", day " + day_labels[t]);
      }
    }
  }
}

std::vector<std::string> consecutive_dates(const std::string& start,
                                           std::size_t count) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (std::sscanf(start.c_str(), "%d-%u-%u", &y, &m, &d) != 3) {
    throw DomainError("consecutive_dates: bad start date '" + start + "'");
  }
  const std::chrono::year_month_day first{std::chrono::year{y},
                                          std::chrono::month{m},
                                          std::chrono::day{d}};
  if (!first.ok()) {
    throw DomainError("consecutive_dates: invalid date '" + start + "'");
  }
  std::vector<std::string> out;
  out.reserve(count);
  std::chrono::sys_days day{first};
  for (std::size_t k = 0; k < count; ++k, day += std::chrono::days{1}) {
    const std::chrono::year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()),
                  unsigned(ymd.month()), unsigned(ymd.day()));
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace raincop
