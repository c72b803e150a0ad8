#pragma once

// Small statistics helpers for run summaries and trend checks.

#include <span>

namespace edgellm {

double mean(std::span<const double> xs);
// Sample standard deviation; 0 for fewer than two points.
double sample_stddev(std::span<const double> xs);
// Half-width of the two-sided 95% Student-t interval around the mean.
double ci95_half_width(std::span<const double> xs);

struct MannKendall {
  double s = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;  // two-sided
  // +1 increasing, -1 decreasing, 0 no significant trend at `alpha`.
  int trend = 0;
};

// Mann-Kendall trend test with the tie-corrected variance and continuity
// correction; normal approximation.
MannKendall mann_kendall(std::span<const double> xs, double alpha = 0.05);

}  // namespace edgellm
