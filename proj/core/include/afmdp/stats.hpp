#pragma once

#include <cstddef>
#include <vector>

namespace afmdp {

/// Linearly interpolated quantile (the "type 7" rule) of unsorted values.
/// q must lie in [0, 1]; throws DomainError on an empty input.
double quantile(std::vector<double> values, double q);

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

struct Summary {
    std::size_t count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
};

Summary summarize(const std::vector<double>& values);

}  // namespace afmdp
