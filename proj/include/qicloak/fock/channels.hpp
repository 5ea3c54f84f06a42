#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>
#include <vector>

#include "qicloak/errors.hpp"
#include "qicloak/fock/operators.hpp"
#include "qicloak/fock/state.hpp"

namespace qicloak::fock {

enum class ChannelKind { BeamSplitter, PhaseShift, TwoModeSqueezer };

// BeamSplitter(eta):    a <- sqrt(eta) a + sqrt(1-eta) b   (first listed mode
//                       is the transmitted one)
// PhaseShift(phi):      a <- a e^{-i phi}
// TwoModeSqueezer(G):   a <- sqrt(G) a + sqrt(G-1) b^dag   (symmetric in the
//                       two listed modes)
struct ChannelSpec {
  ChannelKind kind;
  std::vector<int> modes;
  double parameter = 0.0;

  void validate() const {
    const size_t need = kind == ChannelKind::PhaseShift ? 1 : 2;
    if (modes.size() != need)
      throw DimensionMismatchError("channel expects " + std::to_string(need) + " mode(s)");
    if (need == 2 && modes[0] == modes[1])
      throw DimensionMismatchError("channel modes must be distinct");
    if (!std::isfinite(parameter)) throw InvalidParameterError("channel parameter must be finite");
    if (kind == ChannelKind::BeamSplitter && !(parameter > 0.0 && parameter <= 1.0))
      throw InvalidParameterError("beam splitter transmissivity must be in (0, 1]");
    if (kind == ChannelKind::TwoModeSqueezer && !(parameter >= 1.0))
      throw InvalidParameterError("two-mode squeezer gain must be >= 1");
  }
};

namespace detail {

// exp(theta K) for the antisymmetric tridiagonal K with K[j+1,j] = coup[j].
// The similarity diag(i^j) (iK) diag(i^j)^dag is real symmetric tridiagonal
// with subdiagonal -coup, so the spectral problem stays real and the result
// is exactly unitary regardless of truncation.
inline Dense sector_exponential(const std::vector<double>& coup, double theta) {
  const long n = long(coup.size()) + 1;
  if (n == 1) return Dense::Identity(1, 1);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (long j = 0; j + 1 < n; ++j) sub[j] = -coup[size_t(j)];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  const Dense v = es.eigenvectors().cast<Complex>();
  DenseVec mode_phase(n);
  for (long k = 0; k < n; ++k)
    mode_phase[k] = std::exp(Complex(0.0, -theta * es.eigenvalues()[k]));
  Dense u = v * mode_phase.asDiagonal() * v.transpose();
  static const Complex kQuarterTurns[4] = {
      {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  for (long b = 0; b < n; ++b)
    for (long a = 0; a < n; ++a)
      u(a, b) *= std::conj(kQuarterTurns[a % 4]) * kQuarterTurns[b % 4];
  return u;
}

inline void insert_sector(std::vector<Eigen::Triplet<Complex>>& trip, const Dense& block,
                          const std::vector<long>& flat) {
  for (long c = 0; c < block.cols(); ++c)
    for (long r = 0; r < block.rows(); ++r)
      if (std::abs(block(r, c)) > 1e-14)
        trip.emplace_back(int(flat[size_t(r)]), int(flat[size_t(c)]), block(r, c));
}

}  // namespace detail

// Two-mode beam splitter exp[theta (a^dag b - a b^dag)], theta = arccos(sqrt(eta)),
// assembled per total-photon-number sector (each sector is invariant).
inline Sparse bs_unitary(int dim_a, int dim_b, double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw InvalidParameterError("beam splitter transmissivity must be in (0, 1]");
  const double theta = std::acos(std::min(1.0, std::sqrt(eta)));
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(size_t(dim_a) * dim_b * 4);
  for (int total = 0; total <= dim_a + dim_b - 2; ++total) {
    const int lo = std::max(0, total - (dim_b - 1));
    const int hi = std::min(dim_a - 1, total);
    std::vector<long> flat;
    std::vector<double> coup;
    for (int na = lo; na <= hi; ++na) {
      flat.push_back(long(na) * dim_b + (total - na));
      if (na < hi) coup.push_back(std::sqrt(double(na + 1) * double(total - na)));
    }
    detail::insert_sector(trip, detail::sector_exponential(coup, theta), flat);
  }
  Sparse u(long(dim_a) * dim_b, long(dim_a) * dim_b);
  u.setFromTriplets(trip.begin(), trip.end());
  return u;
}

// Single-mode phase rotation exp(-i phi n).
inline Sparse phase_unitary(int dim, double phi) {
  if (!std::isfinite(phi)) throw InvalidParameterError("phase must be finite");
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(size_t(dim));
  for (int n = 0; n < dim; ++n)
    trip.emplace_back(n, n, std::exp(Complex(0.0, -phi * n)));
  Sparse u(dim, dim);
  u.setFromTriplets(trip.begin(), trip.end());
  return u;
}

// Two-mode squeezer exp[r (a^dag b^dag - a b)], r = arccosh(sqrt(G)),
// assembled per photon-number-difference sector.
inline Sparse tms_unitary(int dim_a, int dim_b, double G) {
  if (!(G >= 1.0)) throw InvalidParameterError("two-mode squeezer gain must be >= 1");
  const double r = std::acosh(std::sqrt(G));
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(size_t(dim_a) * dim_b * 4);
  for (int delta = -(dim_b - 1); delta <= dim_a - 1; ++delta) {
    const int lo = std::max(0, delta);
    const int hi = std::min(dim_a - 1, dim_b - 1 + delta);
    std::vector<long> flat;
    std::vector<double> coup;
    for (int na = lo; na <= hi; ++na) {
      flat.push_back(long(na) * dim_b + (na - delta));
      if (na < hi) coup.push_back(std::sqrt(double(na + 1) * double(na - delta + 1)));
    }
    detail::insert_sector(trip, detail::sector_exponential(coup, r), flat);
  }
  Sparse u(long(dim_a) * dim_b, long(dim_a) * dim_b);
  u.setFromTriplets(trip.begin(), trip.end());
  return u;
}

// Applies one channel to the listed modes of a state. The constructed
// unitaries preserve the trace exactly up to floating-point noise; any drift
// beyond 1e-12 relative indicates a construction bug and throws.
inline TruncatedState apply_channel(const TruncatedState& s, const ChannelSpec& spec) {
  spec.validate();
  const auto& dims = s.mode_dims();
  for (int m : spec.modes)
    if (m < 0 || m >= int(dims.size()))
      throw DimensionMismatchError("apply_channel: mode index out of range");
  Sparse u;
  switch (spec.kind) {
    case ChannelKind::BeamSplitter:
      u = bs_unitary(dims[size_t(spec.modes[0])], dims[size_t(spec.modes[1])], spec.parameter);
      break;
    case ChannelKind::PhaseShift:
      u = phase_unitary(dims[size_t(spec.modes[0])], spec.parameter);
      break;
    case ChannelKind::TwoModeSqueezer:
      u = tms_unitary(dims[size_t(spec.modes[0])], dims[size_t(spec.modes[1])], spec.parameter);
      break;
  }
  const double trace_before = s.trace();
  Dense f = detail::apply_on_modes(s.factor(), dims, spec.modes, u);
  TruncatedState out(dims, std::move(f), s.tail_mass());
  const double drift = std::abs(out.trace() - trace_before);
  if (drift > 1e-12 * std::max(1.0, trace_before))
    throw Error("apply_channel: trace drifted by " + std::to_string(drift) +
                ", unitary construction is broken");
  out.rescale_trace(trace_before);
  return out;
}

}  // namespace qicloak::fock
