#ifndef QUALENS_STATS_HPP
#define QUALENS_STATS_HPP

#include <span>
#include <vector>

namespace qualens::stats {

double mean(std::span<const double> values);

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
double sample_sd(std::span<const double> values);

/// Quantile by linear interpolation between order statistics (Hyndman-Fan
/// type 7, the R default). `sorted` must be ascending and non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

double quantile(std::vector<double> values, double p);

double median(std::vector<double> values);

/// Pearson correlation; 0 if either side has zero variance.
double correlation(std::span<const double> a, std::span<const double> b);

} // namespace qualens::stats

#endif
