#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "qicloak/errors.hpp"
#include "qicloak/fock/operators.hpp"
#include "qicloak/fock/state.hpp"
#include "qicloak/snr.hpp"

namespace qicloak::fock {

struct Moments {
  double mean = 0.0;
  double second = 0.0;  // <O^2>
};

// First and second moments of a Hermitian observable acting on `modes`.
// Uses <O> = <F, OF> and <O^2> = |OF|^2, so O^2 is never formed.
inline Moments moments(const TruncatedState& s, const Sparse& op,
                       const std::vector<int>& modes) {
  const Sparse adj = Sparse(op.adjoint());
  if (Sparse(op - adj).norm() > 1e-12 * std::max(1.0, op.norm()))
    throw InvalidParameterError("moments: observable must be Hermitian");
  const Dense of = detail::apply_on_modes(s.factor(), s.mode_dims(), modes, op);
  const Complex m1 = (s.factor().conjugate().cwiseProduct(of)).sum();
  return {m1.real(), of.squaredNorm()};
}

// Moments of an observable diagonal in the Fock basis, given its full-side
// weight vector. Linear in the factor size.
inline Moments diagonal_moments(const TruncatedState& s, const Eigen::VectorXd& weights) {
  if (weights.size() != s.side())
    throw DimensionMismatchError("diagonal_moments: weight length does not match the side");
  Moments out;
  for (long c = 0; c < s.rank(); ++c) {
    const Complex* col = s.factor().col(c).data();
    double m1 = 0.0, m2 = 0.0;
    for (long r = 0; r < s.side(); ++r) {
      const double p = std::norm(col[r]);
      m1 += weights[r] * p;
      m2 += weights[r] * weights[r] * p;
    }
    out.mean += m1;
    out.second += m2;
  }
  return out;
}

// Weight vector for sum_m coeff[m] * n_m (zero coefficient = mode ignored).
inline Eigen::VectorXd mode_number_weights(const std::vector<int>& dims,
                                           const std::vector<double>& coeffs) {
  if (coeffs.size() != dims.size())
    throw DimensionMismatchError("mode_number_weights: one coefficient per mode required");
  const long side = basis_side(dims);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(side);
  long repeat = 1;
  for (size_t m = dims.size(); m-- > 0;) {
    const int d = dims[m];
    if (coeffs[m] != 0.0) {
      for (long i = 0; i < side; ++i) w[i] += coeffs[m] * double((i / repeat) % d);
    }
    repeat *= d;
  }
  return w;
}

// SNR of distinguishing the phi-rotated state from the reference via one
// observable: signal = difference of means, noise = variance at phi.
inline SnrBreakdown observable_snr(const Moments& at_zero, const Moments& at_phi) {
  return snr_from_moments(at_zero.mean, at_phi.mean, at_phi.second);
}

}  // namespace qicloak::fock
