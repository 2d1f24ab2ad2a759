#pragma once

#include <span>

namespace vdcal::stats {

/// Percentile by linear interpolation between order statistics: with the
/// sorted values x[0..n-1], the position is h = (n-1)·p and the result is
/// x[floor(h)] + (h - floor(h))·(x[floor(h)+1] - x[floor(h)]).
/// `p` is a fraction in [0, 1]. Throws InvalidArgument on empty input.
double percentile(std::span<const double> values, double p);

double mean(std::span<const double> values);

/// Population standard deviation over the mean; 0 for a zero mean.
double coefficient_of_variation(std::span<const double> values);

}  // namespace vdcal::stats
