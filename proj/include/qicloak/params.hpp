#pragma once

#include <cmath>
#include <string>

#include "qicloak/errors.hpp"

namespace qicloak {

// One operating point of the illumination experiment.
//
//   N     mean photon number of the probe (per signal mode)
//   n_th  thermal occupation of the background mode
//   eta   transmissivity of the background mixing toward the detector
//   phi   phase imprinted by the cloaked object on the probe
//   G     gain of the parametric mixer stage (1 = stage absent)
//   chi   photocounter efficiency (1 = ideal counters)
struct ProtocolParams {
  double N = 0.0;
  double n_th = 0.0;
  double eta = 1.0;
  double phi = 0.0;
  double G = 1.0;
  double chi = 1.0;

  void validate() const {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(N) || N < 0.0)
      throw InvalidParameterError("N must be finite and >= 0, got " + std::to_string(N));
    if (!finite(n_th) || n_th < 0.0)
      throw InvalidParameterError("n_th must be finite and >= 0, got " + std::to_string(n_th));
    if (!finite(eta) || eta <= 0.0 || eta > 1.0)
      throw InvalidParameterError("eta must be in (0, 1], got " + std::to_string(eta));
    if (!finite(phi))
      throw InvalidParameterError("phi must be finite");
    if (!finite(G) || G < 1.0)
      throw InvalidParameterError("G must be finite and >= 1, got " + std::to_string(G));
    if (!finite(chi) || chi < 0.0 || chi > 1.0)
      throw InvalidParameterError("chi must be in [0, 1], got " + std::to_string(chi));
  }
};

}  // namespace qicloak
