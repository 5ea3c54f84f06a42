#pragma once

#include <cmath>

#include "qicloak/errors.hpp"
#include "qicloak/params.hpp"
#include "qicloak/snr.hpp"

// Closed-form moments and signal-to-noise ratios for the three detection
// protocols against a phase object embedded in a lossy thermal background:
//
//   classical:  coherent probe of mean photon number N, homodyne of the
//               position quadrature of the return.
//   quadrature: two-mode squeezed probe (signal out, idler kept), measuring
//               the cross-correlator x_s x_i - p_s p_i.
//   mixer:      same probe, but signal and idler are recombined in a
//               parametric amplifier of gain G and the output photon-number
//               difference G n_i - (G-1) n_s is counted; the imperfect
//               variant puts detectors of efficiency chi on both ports.
//
// Every channel mixes the probe with a thermal background of occupation n_th
// through a beam splitter of transmissivity eta; the object imprints phase
// phi on the probe arm. Signal = mean shift between phi and 0, noise =
// variance at phi.
namespace qicloak::analytic {

// The mixer-output mean can be written with the return amplitude entering
// either as sqrt(eta) or eta; only SqrtEta reproduces the exact model (the
// signal mode is attenuated in amplitude, its correlator with the untouched
// idler scales with sqrt(eta)). Eta is retained for cross-checking.
enum class MixerMeanVariant { SqrtEta, Eta };
inline constexpr MixerMeanVariant kAdjudicatedVariant = MixerMeanVariant::SqrtEta;

struct AnalyticMoments {
  double mean_at_zero = 0.0;
  double mean_at_phi = 0.0;
  double second_at_phi = 0.0;  // <O^2> with the object present
};

inline SnrBreakdown to_snr(const AnalyticMoments& m) {
  return snr_from_moments(m.mean_at_zero, m.mean_at_phi, m.second_at_phi);
}

inline double to_db(double ratio) { return 10.0 * std::log10(ratio); }

// ---- classical (coherent + homodyne) ---------------------------------------

inline double classical_variance(const ProtocolParams& p) {
  p.validate();
  return p.eta / 2.0 + (1.0 - p.eta) * (p.n_th + 0.5);
}

inline AnalyticMoments classical_moments(const ProtocolParams& p) {
  const double var = classical_variance(p);  // phase independent
  const double amp = std::sqrt(2.0 * p.eta * p.N);
  AnalyticMoments m;
  m.mean_at_zero = amp;
  m.mean_at_phi = amp * std::cos(p.phi);
  m.second_at_phi = var + m.mean_at_phi * m.mean_at_phi;
  return m;
}

inline SnrBreakdown classical_snr(const ProtocolParams& p) {
  return to_snr(classical_moments(p));
}

// ---- entangled probe, quadrature correlator --------------------------------

inline double quadrature_variance(const ProtocolParams& p) {
  p.validate();
  const double c = std::cos(p.phi);
  return p.eta * (1.0 + 4.0 * p.N * (p.N + 1.0) * c * c) +
         (1.0 - p.eta) * (2.0 * p.n_th * p.N + p.n_th + p.N + 1.0);
}

inline AnalyticMoments quadrature_moments(const ProtocolParams& p) {
  const double var = quadrature_variance(p);
  const double amp = 2.0 * std::sqrt(p.eta * p.N * (p.N + 1.0));
  AnalyticMoments m;
  m.mean_at_zero = amp;
  m.mean_at_phi = amp * std::cos(p.phi);
  m.second_at_phi = var + m.mean_at_phi * m.mean_at_phi;
  return m;
}

inline SnrBreakdown quantum_snr(const ProtocolParams& p) {
  return to_snr(quadrature_moments(p));
}

// Exact quantum/classical SNR ratio. The (1 - cos phi)^2 signal factor is
// common to both protocols and cancels, so the ratio stays finite for all
// phi; only the single point N = 0, phi = 0 has no defined limit along both
// parameter directions at once.
inline double snr_ratio(const ProtocolParams& p) {
  p.validate();
  if (p.N == 0.0 && p.phi == 0.0)
    throw IndeterminateRatioError("snr_ratio is indeterminate at N = 0, phi = 0");
  const double r = (1.0 - p.eta) / p.eta;
  const double c2 = std::cos(p.phi) * std::cos(p.phi);
  const double num = (p.N + 1.0) * (1.0 + r * (2.0 * p.n_th + 1.0));
  const double den = 1.0 + 4.0 * p.N * (p.N + 1.0) * c2 +
                     r * (2.0 * p.n_th * p.N + p.n_th + p.N + 1.0);
  return num / den;
}

inline double snr_ratio_db(const ProtocolParams& p) { return to_db(snr_ratio(p)); }

// First-order expansion of snr_ratio in N at cos^2 phi = 1:
// ratio ~ a0 - a1 N. Useful for reading off the low-brightness gain and its
// erosion rate.
inline double ratio_small_n_expansion(double N, double n_th, double eta) {
  ProtocolParams p;
  p.N = N;
  p.n_th = n_th;
  p.eta = eta;
  p.validate();
  const double r = (1.0 - eta) / eta;
  const double base = 1.0 + r + r * n_th;
  const double a0 = (1.0 + r + 2.0 * r * n_th) / base;
  const double a1 = (3.0 + r * n_th) * (1.0 + r + 2.0 * r * n_th) / (base * base);
  return a0 - a1 * N;
}

// Largest probe brightness with any quantum advantage at cos^2 phi = 1:
// the positive root of 4 N^2 + 3 N - r n_th = 0, r = (1 - eta) / eta.
// Zero when the background is lossless or cold (no excess noise to beat).
inline double gain_region_upper_bound(double eta, double n_th) {
  ProtocolParams p;
  p.n_th = n_th;
  p.eta = eta;
  p.validate();
  const double rn = (1.0 - eta) / eta * n_th;
  return (-3.0 + std::sqrt(9.0 + 16.0 * rn)) / 8.0;
}

// ---- entangled probe, parametric mixer + photon counting -------------------

namespace detail {

inline double mixer_amp(const ProtocolParams& p, MixerMeanVariant variant) {
  const double f = variant == MixerMeanVariant::SqrtEta ? std::sqrt(p.eta) : p.eta;
  return 2.0 * f * std::sqrt(p.N * (p.N + 1.0));
}

}  // namespace detail

inline double jm_output_mean(const ProtocolParams& p,
                             MixerMeanVariant variant = kAdjudicatedVariant) {
  p.validate();
  const double c0 = p.G - 1.0, c1 = 2.0 * p.G - 1.0;
  const double c2 = std::sqrt(p.G * (p.G - 1.0));
  return c0 + c1 * p.N + c2 * detail::mixer_amp(p, variant) * std::cos(p.phi);
}

inline AnalyticMoments jm_moments(const ProtocolParams& p,
                                  MixerMeanVariant variant = kAdjudicatedVariant) {
  p.validate();
  if (p.G <= 1.0) throw ZeroSignalError("mixer gain G = 1 produces no phase signal");
  const double c1 = 2.0 * p.G - 1.0;
  const double c2 = std::sqrt(p.G * (p.G - 1.0));
  const double amp = c2 * detail::mixer_amp(p, variant);
  const double mu = amp * std::cos(p.phi);
  const double var = c1 * c1 * p.N * (p.N + 1.0) + c2 * c2 * quadrature_variance(p) +
                     c1 * mu * (2.0 * p.N + 1.0);
  AnalyticMoments m;
  m.mean_at_zero = (p.G - 1.0) + c1 * p.N + amp;
  m.mean_at_phi = (p.G - 1.0) + c1 * p.N + mu;
  m.second_at_phi = var + m.mean_at_phi * m.mean_at_phi;
  return m;
}

inline SnrBreakdown jm_snr(const ProtocolParams& p,
                           MixerMeanVariant variant = kAdjudicatedVariant) {
  return to_snr(jm_moments(p, variant));
}

// Mean photon numbers of the two mixer output ports with the lossy return
// (needed for the shot-noise term that inefficient detectors add).
inline double mixer_port_idler(const ProtocolParams& p, MixerMeanVariant variant) {
  const double c2 = std::sqrt(p.G * (p.G - 1.0));
  const double mu = detail::mixer_amp(p, variant) * std::cos(p.phi);
  return p.G * p.N + (p.G - 1.0) * (1.0 + p.eta * p.N + (1.0 - p.eta) * p.n_th) + c2 * mu;
}

inline double mixer_port_signal(const ProtocolParams& p, MixerMeanVariant variant) {
  const double c2 = std::sqrt(p.G * (p.G - 1.0));
  const double mu = detail::mixer_amp(p, variant) * std::cos(p.phi);
  return p.G * (p.eta * p.N + (1.0 - p.eta) * p.n_th) + (p.G - 1.0) * (p.N + 1.0) + c2 * mu;
}

inline AnalyticMoments imperfect_jm_moments(const ProtocolParams& p,
                                            MixerMeanVariant variant = kAdjudicatedVariant) {
  p.validate();
  if (p.chi <= 0.0) throw ZeroSignalError("detector efficiency chi = 0 measures nothing");
  const AnalyticMoments ideal = jm_moments(p, variant);
  const double shot = p.G * p.G * mixer_port_idler(p, variant) +
                      (p.G - 1.0) * (p.G - 1.0) * mixer_port_signal(p, variant);
  AnalyticMoments m;
  m.mean_at_zero = p.chi * ideal.mean_at_zero;
  m.mean_at_phi = p.chi * ideal.mean_at_phi;
  m.second_at_phi = p.chi * p.chi * ideal.second_at_phi + p.chi * (1.0 - p.chi) * shot;
  return m;
}

inline SnrBreakdown imperfect_jm_snr(const ProtocolParams& p,
                                     MixerMeanVariant variant = kAdjudicatedVariant) {
  return to_snr(imperfect_jm_moments(p, variant));
}

// Large-background limit of the mixer/classical SNR ratio at cos phi = -1,
// epsilon = G - 1: approaches 2 from below as n_th (1 - eta) grows.
inline double jm_ratio_asymptotic(const ProtocolParams& p) {
  p.validate();
  if (p.G <= 1.0) throw ZeroSignalError("mixer gain G = 1 produces no phase signal");
  const double excess = p.n_th * (1.0 - p.eta);
  if (excess <= 0.0)
    throw OutOfRegimeError("asymptotic ratio needs a lossy thermal background");
  const double eps = p.G - 1.0;
  return 2.0 - (4.0 * std::sqrt(p.eta * p.N / eps) + 1.0) / excess;
}

// Minimum detector efficiency that preserves a quantum advantage in the
// large-background limit: chi* = 1/2 + 2 sqrt(eta N / eps) / (n_th (1-eta)).
// Only meaningful when the mixer gain dominates the returned brightness.
inline double efficiency_threshold(const ProtocolParams& p) {
  p.validate();
  if (p.G <= 1.0) throw ZeroSignalError("mixer gain G = 1 produces no phase signal");
  const double excess = p.n_th * (1.0 - p.eta);
  if (excess <= 0.0)
    throw OutOfRegimeError("efficiency threshold needs a lossy thermal background");
  const double eps = p.G - 1.0;
  if (eps <= p.eta * p.N / (excess * excess))
    throw OutOfRegimeError("gain too small for the large-background expansion");
  return 0.5 + 2.0 * std::sqrt(p.eta * p.N / eps) / excess;
}

}  // namespace qicloak::analytic
