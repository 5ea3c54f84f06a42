#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qicloak/analytic.hpp"
#include "qicloak/errors.hpp"
#include "qicloak/fock/channels.hpp"
#include "qicloak/fock/measurement.hpp"
#include "qicloak/fock/operators.hpp"
#include "qicloak/fock/state.hpp"
#include "qicloak/params.hpp"
#include "qicloak/snr.hpp"
#include "qicloak/table.hpp"
#include "qicloak/version.hpp"

// Numerical oracle and scenario drivers. The oracle rebuilds every protocol
// from first principles in a truncated Fock space (states, beam splitters,
// squeezers, photon counting) and never consults the closed forms it is used
// to check; agreement is certified by recomputing with all mode dimensions
// enlarged by 30% and demanding the moments stay put.
namespace qicloak::engine {

enum class Protocol { Classical, Quadrature, Jm, JmImperfect };

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Classical: return "classical";
    case Protocol::Quadrature: return "quadrature";
    case Protocol::Jm: return "jm";
    case Protocol::JmImperfect: return "jm_imperfect";
  }
  return "?";
}

inline Protocol protocol_from_name(const std::string& name) {
  if (name == "classical") return Protocol::Classical;
  if (name == "quadrature") return Protocol::Quadrature;
  if (name == "jm") return Protocol::Jm;
  if (name == "jm_imperfect") return Protocol::JmImperfect;
  throw InvalidParameterError("unknown protocol: " + name +
                              " (classical, quadrature, jm, jm_imperfect)");
}

inline bool uses_mixer(Protocol p) {
  return p == Protocol::Jm || p == Protocol::JmImperfect;
}

struct OracleSettings {
  double tolerance = 1e-5;
  long side_cap = fock::kDefaultSideCap;
  // When set, the phase object acts on the probe before the thermal
  // background mixes in instead of after. The reduced output state is the
  // same either way (the background is phase invariant); this switch lets
  // the equivalence be checked numerically rather than assumed.
  bool object_before_background = false;
  analytic::MixerMeanVariant variant = analytic::kAdjudicatedVariant;
};

struct OracleDims {
  int signal = 0;
  int idler = 0;
  int env = 0;
  int ancilla = 0;
};

namespace detail {

using fock::Complex;
using fock::Dense;
using fock::DenseVec;
using fock::Sparse;
using fock::TruncatedState;

// Smallest dimension holding a thermal-shaped occupation of the given mean
// so that the neglected weight (with a quadratic margin for second-moment
// weighting) is below target. Thermal tails dominate every distribution met
// here, so this is a safe one-size bound.
inline int dim_for_mean(double mean, double target) {
  const int kFloor = 4;
  if (!(mean > 0.0) || target >= 1.0) return kFloor;
  const double lam = mean / (1.0 + mean);
  const double log_lam = std::log(lam);
  for (int d = kFloor;; ++d) {
    const double log_tail = d * log_lam + 2.0 * std::log(double(d) + 1.0);
    if (log_tail <= std::log(target)) return d;
    if (d > (1 << 22))
      throw TruncationOverflowError("mode dimension required for the target is impractical");
  }
}

inline int scaled_dim(int d, double scale) {
  return d == 0 ? 0 : int(std::ceil(d * scale));
}

struct DimPlan {
  int source = 0;      // probe dimension at construction (per mode)
  int signal = 0;      // signal through the background stage
  int idler = 0;       // 0 for the classical protocol
  int env = 0;
  int mix_signal = 0;  // padded signal/idler through the mixer stage
  int mix_idler = 0;
  int ancilla = 0;     // detector-loss ancilla
};

inline DimPlan plan_dims(Protocol proto, const ProtocolParams& p, const OracleSettings& s,
                         double scale) {
  const double target = s.tolerance * 1e-3;
  const double post_bs_signal = p.eta * p.N + (1.0 - p.eta) * p.n_th;
  const double post_bs_env = (1.0 - p.eta) * p.N + p.eta * p.n_th;
  DimPlan d;
  d.signal = dim_for_mean(std::max(p.N, post_bs_signal), target);
  d.env = dim_for_mean(std::max(p.n_th, post_bs_env), target);
  if (proto == Protocol::Classical) {
    d.source = d.signal;
  } else {
    d.source = dim_for_mean(p.N, target);
    d.idler = d.source;
    d.signal = std::max(d.signal, d.source);
  }
  if (uses_mixer(proto)) {
    ProtocolParams bright = p;  // ports are fullest with the object absent
    bright.phi = 0.0;
    const double port_i = analytic::mixer_port_idler(bright, s.variant);
    const double port_s = analytic::mixer_port_signal(bright, s.variant);
    d.mix_signal = std::max(d.signal, dim_for_mean(std::max(port_s, post_bs_signal), target));
    d.mix_idler = std::max(d.idler, dim_for_mean(std::max(port_i, p.N), target));
    if (proto == Protocol::JmImperfect) {
      const double leaked = (1.0 - p.chi) * std::max(port_i, port_s);
      d.ancilla = dim_for_mean(leaked, target);
    }
  }
  d.source = scaled_dim(d.source, scale);
  d.signal = std::max(scaled_dim(d.signal, scale), d.source);
  d.idler = scaled_dim(d.idler, scale);
  d.env = scaled_dim(d.env, scale);
  d.mix_signal = std::max(scaled_dim(d.mix_signal, scale), d.signal);
  d.mix_idler = std::max(scaled_dim(d.mix_idler, scale), d.idler);
  d.ancilla = scaled_dim(d.ancilla, scale);
  return d;
}

// Phase rotation on one mode applied as a diagonal factor update (cheaper
// than the generic channel path and exactly equivalent).
inline TruncatedState with_mode_phase(const TruncatedState& s, int mode, double phi) {
  if (phi == 0.0) return s;
  const auto& dims = s.mode_dims();
  const auto strides = fock::detail::strides_of(dims);
  const int d = dims[size_t(mode)];
  std::vector<Complex> ph(static_cast<size_t>(d));
  for (int n = 0; n < d; ++n) ph[size_t(n)] = std::exp(Complex(0.0, -phi * n));
  Dense f = s.factor();
  const long side = f.rows();
  const long stride = strides[size_t(mode)];
  for (long c = 0; c < f.cols(); ++c) {
    Complex* col = f.col(c).data();
    for (long r = 0; r < side; ++r) col[r] *= ph[size_t((r / stride) % d)];
  }
  return TruncatedState(dims, std::move(f), s.tail_mass());
}

// Drops the lightest factor columns while their total weight stays under
// budget; keeps downstream tensor attachments affordable.
inline TruncatedState prune_columns(const TruncatedState& s, double budget) {
  const long cols = s.rank();
  std::vector<std::pair<double, long>> weight(static_cast<size_t>(cols));
  for (long c = 0; c < cols; ++c) weight[size_t(c)] = {s.factor().col(c).squaredNorm(), c};
  std::sort(weight.begin(), weight.end());
  double dropped = 0.0;
  size_t first_kept = 0;
  while (first_kept < weight.size() - 1 &&
         dropped + weight[first_kept].first <= budget) {
    dropped += weight[first_kept].first;
    ++first_kept;
  }
  if (first_kept == 0) return s;
  const double trace = s.trace();
  Dense f(s.side(), long(weight.size() - first_kept));
  for (size_t j = first_kept; j < weight.size(); ++j)
    f.col(long(j - first_kept)) = s.factor().col(weight[j].second);
  TruncatedState out(s.mode_dims(), std::move(f), s.tail_mass() + dropped);
  out.rescale_trace(trace);
  return out;
}

// Blocks of the reduced signal-idler density matrix restricted to the
// photon-number-difference sectors. The correlator and mixer observables
// conserve that difference, so these blocks carry everything their moments
// need, at a fraction of the reduced state's full rank.
struct SectorData {
  int ds = 0, di = 0;
  std::vector<Dense> gram;  // per sector delta = ns - ni
  double trace = 0.0;
  int index_of(int delta) const { return delta + di - 1; }
};

inline SectorData build_sectors(const TruncatedState& fat) {
  const auto& dims = fat.mode_dims();
  SectorData sd;
  sd.ds = dims[0];
  sd.di = dims[1];
  sd.gram.resize(size_t(sd.ds + sd.di - 1));
  const Dense& f = fat.factor();
  const long cols = f.cols();
  for (int delta = -(sd.di - 1); delta <= sd.ds - 1; ++delta) {
    const int lo = std::max(0, delta);
    const int hi = std::min(sd.ds - 1, sd.di - 1 + delta);
    const long k = hi - lo + 1;
    Dense x(k, cols);
    for (long j = 0; j < k; ++j) {
      const int ns = lo + int(j);
      x.row(j) = f.row(long(ns) * sd.di + (ns - delta));
    }
    Dense g = Dense::Zero(k, k);
    g.selfadjointView<Eigen::Lower>().rankUpdate(x);
    g = g.selfadjointView<Eigen::Lower>();
    sd.trace += g.trace().real();
    sd.gram[size_t(sd.index_of(delta))] = std::move(g);
  }
  return sd;
}

// Sector gram with the object phase imprinted on the signal index:
// rho_ab -> rho_ab e^{-i phi (ns_a - ns_b)}.
inline Dense twiddled(const Dense& g, int lo, double phi) {
  if (phi == 0.0) return g;
  const long k = g.rows();
  DenseVec v(k);
  for (long j = 0; j < k; ++j) v[j] = std::exp(Complex(0.0, -phi * (lo + j)));
  return v.asDiagonal() * g * v.asDiagonal().toDenseMatrix().conjugate();
}

// Mixer unitary blocks per difference sector at the padded dimensions,
// keeping only the columns over the unpadded support (the rest multiply
// zero blocks of the gram).
struct MixerBlocks {
  std::vector<Dense> b;  // indexed like the padded sector list
  int ds2 = 0, di2 = 0;
  int index_of(int delta) const { return delta + di2 - 1; }
};

inline MixerBlocks build_mixer_blocks(double G, int ds, int di, int ds2, int di2) {
  MixerBlocks mb;
  mb.ds2 = ds2;
  mb.di2 = di2;
  mb.b.resize(size_t(ds2 + di2 - 1));
  const double r = std::acosh(std::sqrt(G));
  for (int delta = -(di - 1); delta <= ds - 1; ++delta) {
    const int lo = std::max(0, delta);
    const int hi = std::min(ds - 1, di - 1 + delta);
    const int hi2 = std::min(ds2 - 1, di2 - 1 + delta);
    const long k = hi - lo + 1;     // unpadded support
    const long n2 = hi2 - lo + 1;   // padded sector size
    std::vector<double> coup(static_cast<size_t>(n2 - 1));
    for (long j = 0; j + 1 < n2; ++j) {
      const double ns = double(lo + j);
      coup[size_t(j)] = std::sqrt((ns + 1.0) * (ns - delta + 1.0));
    }
    mb.b[size_t(mb.index_of(delta))] =
        fock::detail::sector_exponential(coup, r).leftCols(k);
  }
  return mb;
}

// Photon statistics of G n_i - (G-1) n_s after the mixer, evaluated sector
// by sector: p = diag(B T B^dag) with T the phase-twiddled gram.
inline fock::Moments mixer_moments(const SectorData& sd, const MixerBlocks& mb, double phi,
                                   double G) {
  fock::Moments out;
  double total = 0.0;
  for (int delta = -(sd.di - 1); delta <= sd.ds - 1; ++delta) {
    const Dense& g = sd.gram[size_t(sd.index_of(delta))];
    if (g.size() == 0) continue;
    const int lo = std::max(0, delta);
    const Dense& b = mb.b[size_t(mb.index_of(delta))];
    const Dense m = b * twiddled(g, lo, phi);
    for (long row = 0; row < b.rows(); ++row) {
      const double prob = (m.row(row).cwiseProduct(b.row(row).conjugate())).sum().real();
      const double ns = double(lo + row);
      const double w = G * (ns - delta) - (G - 1.0) * ns;
      out.mean += w * prob;
      out.second += w * w * prob;
      total += prob;
    }
  }
  if (std::abs(total - sd.trace) > 1e-9 * std::max(1.0, sd.trace))
    throw Error("mixer sector probabilities do not sum to the state trace");
  return out;
}

inline Sparse correlator_op(int ds, int di) {
  // a_s a_i + a_s^dag a_i^dag == x_s x_i - p_s p_i
  const Sparse lower = fock::sparse_kron(fock::to_sparse(fock::annihilation_matrix(ds)),
                                         fock::to_sparse(fock::annihilation_matrix(di)));
  return lower + Sparse(lower.adjoint());
}

}  // namespace detail

// Builds each protocol's output state numerically and measures the protocol
// observable. The parts that do not depend on the object phase (probe,
// background, beam splitter, reduction) are cached per dimension scale, so
// phase sweeps and mean-at-zero references reuse them.
class OracleEvaluator {
 public:
  OracleEvaluator(Protocol proto, ProtocolParams base, OracleSettings settings)
      : proto_(proto), base_(base), settings_(settings) {
    base_.validate();
  }

  const OracleSettings& settings() const { return settings_; }
  Protocol protocol() const { return proto_; }

  fock::Moments moments_at(const ProtocolParams& point, double scale = 1.0) {
    point.validate();
    if (point.N != base_.N || point.n_th != base_.n_th || point.eta != base_.eta)
      throw InvalidParameterError(
          "oracle evaluator is bound to fixed N, n_th, eta; vary phi, G, chi only");
    Prefix& pre = prefix(scale, settings_.object_before_background ? point.phi : 0.0);
    const double twiddle = settings_.object_before_background ? 0.0 : point.phi;
    switch (proto_) {
      case Protocol::Classical: {
        const auto st = detail::with_mode_phase(pre.fat, 0, twiddle);
        return fock::moments(
            st, fock::to_sparse(fock::position_matrix(pre.plan.signal)), {0});
      }
      case Protocol::Quadrature: {
        const auto st = detail::with_mode_phase(pre.fat, 0, twiddle);
        return fock::moments(
            st, detail::correlator_op(pre.plan.signal, pre.plan.idler), {0, 1});
      }
      case Protocol::Jm:
        return detail::mixer_moments(sectors(pre), mixer_blocks(pre, point.G), twiddle,
                                     point.G);
      case Protocol::JmImperfect:
        return imperfect_moments(pre, twiddle, point.G, point.chi);
    }
    throw Error("unreachable protocol");
  }

  OracleDims dims_at(double scale) const {
    const detail::DimPlan d = detail::plan_dims(proto_, base_, settings_, scale);
    OracleDims out;
    out.signal = std::max(d.signal, d.mix_signal);
    out.idler = std::max(d.idler, d.mix_idler);
    out.env = d.env;
    out.ancilla = d.ancilla;
    return out;
  }

  double tail_at(double scale, double phi_for_prefix = 0.0) {
    return prefix(scale, settings_.object_before_background ? phi_for_prefix : 0.0)
        .fat.tail_mass();
  }

 private:
  struct Prefix {
    fock::TruncatedState fat;  // (signal, idler) reduced state, or (signal) classical
    detail::DimPlan plan;
    std::optional<detail::SectorData> sectors;
    std::optional<fock::TruncatedState> compact;           // for the detector pipeline
    std::map<std::uint64_t, detail::MixerBlocks> blocks;  // per gain
  };

  static std::uint64_t bits_of(double v) {
    std::uint64_t u;
    std::memcpy(&u, &v, sizeof u);
    return u;
  }

  Prefix& prefix(double scale, double pre_phase) {
    const auto key = std::make_pair(long(std::lround(scale * 1000)), bits_of(pre_phase));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    while (cache_.size() >= 2) cache_.erase(cache_.begin());
    const detail::DimPlan plan = detail::plan_dims(proto_, base_, settings_, scale);
    auto inserted =
        cache_.emplace(key, Prefix{build_prefix(plan, pre_phase), plan, {}, {}, {}});
    return inserted.first->second;
  }

  fock::TruncatedState build_prefix(const detail::DimPlan& plan, double pre_phase) {
    const fock::TruncationPolicy loose{1.0, settings_.side_cap, false};
    const auto env = fock::make_thermal(base_.n_th, plan.env, loose);
    if (proto_ == Protocol::Classical) {
      auto probe = fock::make_coherent(std::sqrt(base_.N), plan.signal, loose);
      probe = detail::with_mode_phase(probe, 0, pre_phase);
      auto joint = fock::attach_mode(probe, env, settings_.side_cap);
      joint = fock::apply_channel(
          joint, {fock::ChannelKind::BeamSplitter, {0, 1}, base_.eta});
      return fock::partial_trace(joint, {0});
    }
    auto probe = fock::make_tmsv(base_.N, plan.source, loose);
    probe = fock::pad_mode(probe, 0, plan.signal, settings_.side_cap);
    probe = detail::with_mode_phase(probe, 0, pre_phase);
    auto joint = fock::attach_mode(probe, env, settings_.side_cap);
    joint = fock::apply_channel(
        joint, {fock::ChannelKind::BeamSplitter, {0, 2}, base_.eta});
    return fock::partial_trace(joint, {0, 1});
  }

  const detail::SectorData& sectors(Prefix& pre) {
    if (!pre.sectors) pre.sectors = detail::build_sectors(pre.fat);
    return *pre.sectors;
  }

  const detail::MixerBlocks& mixer_blocks(Prefix& pre, double G) {
    auto it = pre.blocks.find(bits_of(G));
    if (it != pre.blocks.end()) return it->second;
    auto inserted = pre.blocks.emplace(
        bits_of(G), detail::build_mixer_blocks(G, pre.plan.signal, pre.plan.idler,
                                               pre.plan.mix_signal, pre.plan.mix_idler));
    return inserted.first->second;
  }

  // Detector inefficiency simulated physically: a transmissivity-chi beam
  // splitter against vacuum on each mixer port, photon difference counted on
  // the transmitted modes. Works on an eigenvalue-compacted prefix so the
  // ancilla attachments stay affordable.
  fock::Moments imperfect_moments(Prefix& pre, double phi, double G, double chi) {
    if (!pre.compact) pre.compact = pre.fat.compacted();
    auto st = detail::with_mode_phase(*pre.compact, 0, phi);
    st = fock::pad_mode(st, 0, pre.plan.mix_signal, settings_.side_cap);
    st = fock::pad_mode(st, 1, pre.plan.mix_idler, settings_.side_cap);
    if (G > 1.0)
      st = fock::apply_channel(st, {fock::ChannelKind::TwoModeSqueezer, {0, 1}, G});
    if (chi < 1.0) {
      const double budget = settings_.tolerance * 1e-4;
      const auto vac = fock::make_vacuum(pre.plan.ancilla);
      st = fock::attach_mode(st, vac, settings_.side_cap);
      st = fock::apply_channel(st, {fock::ChannelKind::BeamSplitter, {0, 2}, chi});
      st = fock::partial_trace(st, {0, 1});
      st = detail::prune_columns(st, budget);
      st = fock::attach_mode(st, vac, settings_.side_cap);
      st = fock::apply_channel(st, {fock::ChannelKind::BeamSplitter, {1, 2}, chi});
      st = detail::prune_columns(st, budget);
    }
    std::vector<double> coeff(st.mode_dims().size(), 0.0);
    coeff[0] = -(G - 1.0);
    coeff[1] = G;
    return fock::diagonal_moments(st, fock::mode_number_weights(st.mode_dims(), coeff));
  }

  Protocol proto_;
  ProtocolParams base_;
  OracleSettings settings_;
  std::map<std::pair<long, std::uint64_t>, Prefix> cache_;
};

struct OracleOutcome {
  fock::Moments at_zero;
  fock::Moments at_phi;
  OracleDims dims;
  double tail_mass = 0.0;
};

namespace detail {

inline bool moments_agree(const fock::Moments& a, const fock::Moments& b, double tol) {
  const double second_scale = std::max({std::abs(a.second), std::abs(b.second), 1.0});
  const double mean_scale =
      std::max({std::sqrt(second_scale), std::abs(a.mean), std::abs(b.mean)});
  return std::abs(a.mean - b.mean) <= tol * mean_scale &&
         std::abs(a.second - b.second) <= tol * second_scale;
}

}  // namespace detail

// Moments at phi and at the zero reference, accepted only once a 30% larger
// basis reproduces them within a quarter of the requested tolerance. Grows
// the basis (x1.69 per round) until agreement or the size cap.
inline OracleOutcome converged_point(OracleEvaluator& ev, const ProtocolParams& pt) {
  ProtocolParams zero = pt;
  zero.phi = 0.0;
  const double tol = ev.settings().tolerance / 4.0;
  double scale = 1.0;
  for (int round = 0; round < 4; ++round, scale *= 1.69) {
    const auto z1 = ev.moments_at(zero, scale);
    const auto f1 = ev.moments_at(pt, scale);
    const double fine = scale * 1.3;
    const auto z2 = ev.moments_at(zero, fine);
    const auto f2 = ev.moments_at(pt, fine);
    if (detail::moments_agree(z1, z2, tol) && detail::moments_agree(f1, f2, tol))
      return {z2, f2, ev.dims_at(fine), ev.tail_at(fine, pt.phi)};
  }
  throw TruncationOverflowError(
      "oracle moments did not converge before reaching the basis cap");
}

inline OracleOutcome converged_oracle(const ProtocolParams& p, Protocol proto,
                                      const OracleSettings& settings) {
  OracleEvaluator ev(proto, p, settings);
  return converged_point(ev, p);
}

// ---- analytic dispatch ------------------------------------------------------

inline SnrBreakdown analytic_snr(Protocol proto, const ProtocolParams& p,
                                 analytic::MixerMeanVariant variant =
                                     analytic::kAdjudicatedVariant) {
  switch (proto) {
    case Protocol::Classical: return analytic::classical_snr(p);
    case Protocol::Quadrature: return analytic::quantum_snr(p);
    case Protocol::Jm: return analytic::jm_snr(p, variant);
    case Protocol::JmImperfect: return analytic::imperfect_jm_snr(p, variant);
  }
  throw Error("unreachable protocol");
}

// Protocol/classical SNR ratio with the common (1 - cos phi)^2 signal factor
// cancelled, so it is finite at phi = 0 as the limiting value.
inline double analytic_ratio(Protocol proto, const ProtocolParams& p,
                             analytic::MixerMeanVariant variant =
                                 analytic::kAdjudicatedVariant) {
  switch (proto) {
    case Protocol::Classical:
      p.validate();
      return 1.0;
    case Protocol::Quadrature:
      return analytic::snr_ratio(p);
    case Protocol::Jm: {
      const auto m = analytic::jm_moments(p, variant);
      const double var = m.second_at_phi - m.mean_at_phi * m.mean_at_phi;
      return 2.0 * p.G * (p.G - 1.0) * (p.N + 1.0) * analytic::classical_variance(p) / var;
    }
    case Protocol::JmImperfect: {
      const auto m = analytic::imperfect_jm_moments(p, variant);
      const double var = m.second_at_phi - m.mean_at_phi * m.mean_at_phi;
      return p.chi * p.chi * 2.0 * p.G * (p.G - 1.0) * (p.N + 1.0) *
             analytic::classical_variance(p) / var;
    }
  }
  throw Error("unreachable protocol");
}

// ---- scenario driver --------------------------------------------------------

struct ScenarioConfig {
  ProtocolParams params;
  Protocol protocol = Protocol::Quadrature;
  bool oracle = true;
  double tolerance = 1e-5;
  long side_cap = fock::kDefaultSideCap;
  bool object_before_background = false;
  analytic::MixerMeanVariant variant = analytic::kAdjudicatedVariant;

  OracleSettings oracle_settings() const {
    return {tolerance, side_cap, object_before_background, variant};
  }
};

struct ScenarioResult {
  Protocol protocol = Protocol::Quadrature;
  ProtocolParams params;
  SnrBreakdown analytic;
  std::optional<SnrBreakdown> oracle;
  std::optional<double> oracle_discrepancy;
  double ratio_to_classical = 1.0;
  double ratio_db = 0.0;
  OracleDims dims;
  double tail_mass = 0.0;
};

struct FieldComparison {
  const char* field;
  double analytic = 0.0;
  double oracle = 0.0;
  double rel = 0.0;
};

// Relative disagreement per derived quantity; pairs that are both
// numerically zero (< 1e-14) count as agreeing exactly.
inline std::vector<FieldComparison> compare_breakdowns(const SnrBreakdown& a,
                                                       const SnrBreakdown& o) {
  const auto rel = [](double x, double y) {
    const double ax = std::abs(x), ay = std::abs(y);
    if (ax < 1e-14 && ay < 1e-14) return 0.0;
    return std::abs(x - y) / std::max(ax, ay);
  };
  return {
      {"mean_at_zero", a.mean_at_zero, o.mean_at_zero, rel(a.mean_at_zero, o.mean_at_zero)},
      {"mean_at_phi", a.mean_at_phi, o.mean_at_phi, rel(a.mean_at_phi, o.mean_at_phi)},
      {"second_moment", a.second_moment, o.second_moment,
       rel(a.second_moment, o.second_moment)},
      {"noise_var", a.noise_var, o.noise_var, rel(a.noise_var, o.noise_var)},
      {"snr", a.snr, o.snr, rel(a.snr, o.snr)},
  };
}

inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.params.validate();
  ScenarioResult res;
  res.protocol = cfg.protocol;
  res.params = cfg.params;
  res.analytic = analytic_snr(cfg.protocol, cfg.params, cfg.variant);
  res.ratio_to_classical = analytic_ratio(cfg.protocol, cfg.params, cfg.variant);
  res.ratio_db = analytic::to_db(res.ratio_to_classical);
  if (cfg.oracle) {
    const auto out = converged_oracle(cfg.params, cfg.protocol, cfg.oracle_settings());
    res.oracle = snr_from_moments(out.at_zero.mean, out.at_phi.mean, out.at_phi.second);
    double worst = 0.0;
    for (const auto& f : compare_breakdowns(res.analytic, *res.oracle))
      worst = std::max(worst, f.rel);
    res.oracle_discrepancy = worst;
    res.dims = out.dims;
    res.tail_mass = out.tail_mass;
  }
  return res;
}

// ---- cross validation -------------------------------------------------------

enum class ValidationStatus { Pass, Fail, Inconclusive };

inline const char* status_name(ValidationStatus s) {
  switch (s) {
    case ValidationStatus::Pass: return "pass";
    case ValidationStatus::Fail: return "FAIL";
    case ValidationStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

// Deliberate corruption of one analytic quantity, used to prove the
// validation harness actually detects disagreements.
struct Perturbation {
  Protocol protocol = Protocol::Quadrature;
  std::string field;
  double factor = 1.01;
};

struct ValidationPoint {
  ProtocolParams params;
  std::vector<Protocol> protocols;
};

struct ValidationEntry {
  Protocol protocol = Protocol::Classical;
  ProtocolParams params;
  ValidationStatus status = ValidationStatus::Inconclusive;
  double worst_rel = 0.0;
  std::string worst_field;
  OracleDims dims;
  double tail_mass = 0.0;
  std::string note;
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  bool all_passed = false;
  analytic::MixerMeanVariant mixer_mean_variant = analytic::kAdjudicatedVariant;
};

inline std::vector<ValidationPoint> default_validation_grid() {
  const double pi = 3.14159265358979323846;
  const std::vector<Protocol> all = {Protocol::Classical, Protocol::Quadrature,
                                     Protocol::Jm, Protocol::JmImperfect};
  const std::vector<Protocol> no_detector = {Protocol::Classical, Protocol::Quadrature,
                                             Protocol::Jm};
  const std::vector<Protocol> plain = {Protocol::Classical, Protocol::Quadrature};
  std::vector<ValidationPoint> pts;
  ProtocolParams p;
  p.N = 0.05; p.n_th = 1.5; p.eta = 0.9; p.phi = pi / 3; p.G = 1.2; p.chi = 0.8;
  pts.push_back({p, all});
  p.N = 0.1; p.n_th = 1.0; p.eta = 0.9; p.phi = pi / 4; p.G = 1.2; p.chi = 0.7;
  pts.push_back({p, all});
  p.N = 0.2; p.n_th = 3.0; p.eta = 0.7; p.phi = pi; p.G = 1.5; p.chi = 1.0;
  pts.push_back({p, no_detector});
  p.N = 0.01; p.n_th = 0.5; p.eta = 0.99; p.phi = 0.3; p.G = 1.0; p.chi = 1.0;
  pts.push_back({p, plain});
  return pts;
}

inline void perturb_field(SnrBreakdown& b, const std::string& field, double factor) {
  if (field == "mean_at_zero") b.mean_at_zero *= factor;
  else if (field == "mean_at_phi") b.mean_at_phi *= factor;
  else if (field == "second_moment") b.second_moment *= factor;
  else if (field == "noise_var") b.noise_var *= factor;
  else if (field == "snr") b.snr *= factor;
  else throw InvalidParameterError("unknown breakdown field: " + field);
}

inline ValidationReport cross_validate(const std::vector<ValidationPoint>& points,
                                       const OracleSettings& settings,
                                       const Perturbation* bug = nullptr) {
  ValidationReport report;
  report.mixer_mean_variant = settings.variant;
  bool all = true;
  for (const auto& pt : points) {
    for (Protocol proto : pt.protocols) {
      ValidationEntry e;
      e.protocol = proto;
      e.params = pt.params;
      try {
        SnrBreakdown an = analytic_snr(proto, pt.params, settings.variant);
        if (bug && bug->protocol == proto) perturb_field(an, bug->field, bug->factor);
        const auto out = converged_oracle(pt.params, proto, settings);
        const SnrBreakdown orc =
            snr_from_moments(out.at_zero.mean, out.at_phi.mean, out.at_phi.second);
        e.dims = out.dims;
        e.tail_mass = out.tail_mass;
        for (const auto& f : compare_breakdowns(an, orc)) {
          if (f.rel > e.worst_rel) {
            e.worst_rel = f.rel;
            e.worst_field = f.field;
          }
        }
        const double allowed = std::max(settings.tolerance, 100.0 * e.tail_mass);
        e.status = e.worst_rel <= allowed ? ValidationStatus::Pass : ValidationStatus::Fail;
      } catch (const TruncationOverflowError& err) {
        e.status = ValidationStatus::Inconclusive;
        e.note = err.what();
      } catch (const CapacityError& err) {
        e.status = ValidationStatus::Inconclusive;
        e.note = err.what();
      }
      if (e.status != ValidationStatus::Pass) all = false;
      report.entries.push_back(std::move(e));
    }
  }
  report.all_passed = all;
  return report;
}

// ---- parameter sweeps -------------------------------------------------------

struct SweepAxis {
  std::string name;  // one of N, n_th, eta, phi, G, chi
  std::vector<double> values;
};

inline void set_param(ProtocolParams& p, const std::string& name, double value) {
  if (name == "N") p.N = value;
  else if (name == "n_th") p.n_th = value;
  else if (name == "eta") p.eta = value;
  else if (name == "phi") p.phi = value;
  else if (name == "G") p.G = value;
  else if (name == "chi") p.chi = value;
  else throw InvalidParameterError("unknown parameter name: " + name);
}

// Cartesian sweep (first axis outermost). Each row reports the closed-form
// SNRs; the oracle, when enabled, re-measures the selected protocol and the
// row records the worst relative disagreement.
inline table::SweepTable sweep(const ScenarioConfig& base,
                               const std::vector<SweepAxis>& axes) {
  for (const auto& ax : axes) {
    if (ax.values.empty())
      throw InvalidParameterError("sweep axis " + ax.name + " has no values");
    ProtocolParams probe;  // name check
    set_param(probe, ax.name, ax.values.front());
  }
  table::SweepTable t;
  t.metadata = {"qicloak",       kVersion,
                protocol_name(base.protocol), base.tolerance,
                base.oracle,     base.side_cap};

  std::map<std::tuple<double, double, double>, OracleEvaluator> evaluators;
  std::vector<size_t> idx(axes.size(), 0);
  while (true) {
    ProtocolParams p = base.params;
    for (size_t a = 0; a < axes.size(); ++a) set_param(p, axes[a].name, axes[a].values[idx[a]]);
    p.validate();

    table::SweepRow row;
    row["N"] = p.N;
    row["n_th"] = p.n_th;
    row["eta"] = p.eta;
    row["phi"] = p.phi;
    if (uses_mixer(base.protocol)) row["G"] = p.G;
    if (base.protocol == Protocol::JmImperfect) row["chi"] = p.chi;
    row["snr_classical"] = analytic::classical_snr(p).snr;
    row["snr_quantum"] = analytic::quantum_snr(p).snr;
    if (uses_mixer(base.protocol))
      row["snr_jm"] = analytic_snr(base.protocol, p, base.variant).snr;
    try {
      const double ratio = analytic_ratio(base.protocol, p, base.variant);
      row["ratio"] = ratio;
      row["ratio_db"] = analytic::to_db(ratio);
    } catch (const IndeterminateRatioError&) {
      // leave the cells empty
    }
    if (base.oracle) {
      auto key = std::make_tuple(p.N, p.n_th, p.eta);
      auto it = evaluators.find(key);
      if (it == evaluators.end()) {
        ProtocolParams anchor = p;
        it = evaluators
                 .try_emplace(key, base.protocol, anchor, base.oracle_settings())
                 .first;
      }
      const auto out = converged_point(it->second, p);
      const SnrBreakdown orc =
          snr_from_moments(out.at_zero.mean, out.at_phi.mean, out.at_phi.second);
      const SnrBreakdown an = analytic_snr(base.protocol, p, base.variant);
      double worst = 0.0;
      for (const auto& f : compare_breakdowns(an, orc)) worst = std::max(worst, f.rel);
      row["oracle_discrepancy"] = worst;
    }
    t.rows.push_back(std::move(row));

    size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++idx[a] < axes[a].values.size()) break;
      idx[a] = 0;
      if (a == 0) return t;
    }
    if (axes.empty()) return t;
  }
}

// ---- advantage boundaries ---------------------------------------------------

namespace detail {

template <typename F>
double bisect_root(F&& f, double lo, double hi, double abs_tol) {
  // f(lo) > 0 > f(hi); the relative term keeps tiny roots sharp.
  for (int i = 0; i < 200 && hi - lo > abs_tol + 1e-12 * std::abs(lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Probe brightness where the entangled quadrature protocol stops beating the
// classical one (at cos^2 phi = 1), located by bisection on the exact ratio.
// Returns 0 when no brightness has an advantage.
inline std::optional<double> find_gain_boundary(double eta, double n_th) {
  ProtocolParams p;
  p.eta = eta;
  p.n_th = n_th;
  p.phi = 3.14159265358979323846;
  p.validate();
  const auto excess = [&](double N) {
    ProtocolParams q = p;
    q.N = N;
    return analytic::snr_ratio(q) - 1.0;
  };
  if (excess(0.0) <= 0.0) return 0.0;
  double hi = 0.5;
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e9) return std::nullopt;
  }
  return detail::bisect_root(excess, 0.0, hi, 0.0);
}

// Detector efficiency at which the mixer protocol's advantage over the
// classical protocol appears (evaluated at phi = pi, exact ratio, bisection
// in chi). No value when even perfect detectors see no advantage.
inline std::optional<double> find_efficiency_boundary(const ProtocolParams& base) {
  ProtocolParams p = base;
  p.phi = 3.14159265358979323846;
  p.validate();
  const auto edge = [&](double chi) {
    ProtocolParams q = p;
    q.chi = chi;
    return analytic::imperfect_jm_snr(q).snr / analytic::classical_snr(q).snr - 1.0;
  };
  if (edge(1.0) <= 0.0) return std::nullopt;
  // advantage grows with chi, so flip the sign for the bisection convention
  const auto deficit = [&](double chi) { return -edge(chi); };
  return detail::bisect_root(deficit, 1e-9, 1.0, 0.0);
}

}  // namespace qicloak::engine
