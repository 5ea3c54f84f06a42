#pragma once

#include <cmath>
#include <limits>

#include "qicloak/errors.hpp"

namespace qicloak {

// Signal-to-noise decomposition of a phase-contrast measurement.
// Convention: the signal is the shift of the observable's mean away from its
// phi = 0 value, the noise is the variance at the actual phase,
//   snr = (mean_at_zero - mean_at_phi)^2 / (second_moment - mean_at_phi^2).
struct SnrBreakdown {
  double mean_at_zero = 0.0;
  double mean_at_phi = 0.0;
  double second_moment = 0.0;
  double signal_sq = 0.0;
  double noise_var = 0.0;
  double snr = 0.0;
};

// Builds the breakdown from raw moments; the only way variances enter the
// library, so snr == signal_sq / noise_var holds by construction and
// snr is exactly 0 when both means coincide.
inline SnrBreakdown snr_from_moments(double mean_at_zero, double mean_at_phi,
                                     double second_moment) {
  SnrBreakdown b;
  b.mean_at_zero = mean_at_zero;
  b.mean_at_phi = mean_at_phi;
  b.second_moment = second_moment;
  const double shift = mean_at_zero - mean_at_phi;
  b.signal_sq = shift * shift;
  b.noise_var = second_moment - mean_at_phi * mean_at_phi;
  // Guard against a variance that is zero or lost to cancellation; an SNR
  // against such a denominator would be meaningless.
  const double floor =
      8.0 * std::numeric_limits<double>::epsilon() * std::abs(second_moment);
  if (!(b.noise_var > floor))
    throw DegenerateVarianceError("noise variance is zero or numerically degenerate");
  b.snr = (b.signal_sq == 0.0) ? 0.0 : b.signal_sq / b.noise_var;
  return b;
}

}  // namespace qicloak
