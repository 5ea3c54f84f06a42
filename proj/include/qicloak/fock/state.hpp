#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "qicloak/errors.hpp"
#include "qicloak/fock/operators.hpp"

namespace qicloak::fock {

// Ceiling on the tensor-product basis side of any single state. Multi-mode
// joints with a hot thermal mode genuinely need sides in the tens of
// thousands to reach 1e-6 oracle accuracy, so this is well above the side at
// which dense density matrices stay practical (kDenseSideLimit).
inline constexpr long kDefaultSideCap = 524288;

// Largest side for which a dense density matrix may be materialized.
inline constexpr long kDenseSideLimit = 4096;

// Ceiling on side * rank of any single factor. Sides alone do not bound
// memory: a hot thermal mode also carries hundreds of factor columns, and
// transformations hold two to three factor copies at once. 5e7 complex
// entries is 800 MB per copy. Overridable for larger machines.
inline long factor_entry_budget() {
  static const long budget = [] {
    if (const char* s = std::getenv("QI_CLOAK_ENTRY_BUDGET")) {
      const long v = std::atol(s);
      if (v > 0) return v;
    }
    return 50'000'000L;
  }();
  return budget;
}

// How states are built: grow the basis (doubling) until the discarded
// construction tail drops below tail_target, give up at side_cap.
struct TruncationPolicy {
  double tail_target = 1e-10;
  long side_cap = kDefaultSideCap;
  bool grow = true;
};

namespace detail {

// Guard before allocating a side x cols factor; division avoids overflow.
inline void check_entry_budget(long side, long cols, const char* what) {
  if (side > 0 && cols > factor_entry_budget() / side)
    throw CapacityError(std::string(what) + ": a factor of " + std::to_string(side) +
                        " x " + std::to_string(cols) +
                        " complex entries exceeds the memory budget " +
                        std::to_string(factor_entry_budget()) +
                        " (QI_CLOAK_ENTRY_BUDGET raises it)");
}

// Strides of a row-major multi-index (mode 0 slowest).
inline std::vector<long> strides_of(const std::vector<int>& dims) {
  std::vector<long> s(dims.size());
  long acc = 1;
  for (size_t m = dims.size(); m-- > 0;) {
    s[m] = acc;
    acc *= dims[m];
  }
  return s;
}

// Flat global offsets of every multi-index over the listed modes, in
// row-major order of that list.
inline std::vector<long> subset_offsets(const std::vector<int>& dims,
                                        const std::vector<long>& strides,
                                        const std::vector<int>& modes) {
  long count = 1;
  for (int m : modes) count *= dims[size_t(m)];
  std::vector<long> offsets(size_t(count), 0);
  long repeat = 1;  // how many consecutive entries share the current digit
  for (size_t j = modes.size(); j-- > 0;) {
    const int d = dims[size_t(modes[j])];
    const long stride = strides[size_t(modes[j])];
    const long block = repeat * d;
    for (long i = 0; i < count; ++i) {
      const long digit = (i / repeat) % d;
      offsets[size_t(i)] += digit * stride;
    }
    repeat = block;
  }
  return offsets;
}

inline std::vector<int> complement_modes(size_t n_modes, const std::vector<int>& modes) {
  std::vector<char> used(n_modes, 0);
  for (int m : modes) {
    if (m < 0 || m >= int(n_modes)) throw DimensionMismatchError("mode index out of range");
    if (used[size_t(m)]) throw DimensionMismatchError("duplicate mode index");
    used[size_t(m)] = 1;
  }
  std::vector<int> rest;
  for (size_t m = 0; m < n_modes; ++m)
    if (!used[m]) rest.push_back(int(m));
  return rest;
}

// Applies a (sparse) matrix living on the subspace of `modes` to every column
// of the factor. The workhorse behind channels and subset observables.
// Gathers all factor columns for one outer index into a dense block so the
// sparse operator is applied as a matrix product rather than column by column.
inline Dense apply_on_modes(const Dense& factor, const std::vector<int>& dims,
                            const std::vector<int>& modes, const Sparse& op) {
  const auto strides = strides_of(dims);
  const auto sub = subset_offsets(dims, strides, modes);
  const auto outer_modes = complement_modes(dims.size(), modes);
  const auto outer = subset_offsets(dims, strides, outer_modes);
  const long sub_side = long(sub.size());
  if (op.rows() != sub_side || op.cols() != sub_side)
    throw DimensionMismatchError("operator side does not match the selected modes");
  if (sub_side == factor.rows() && std::is_sorted(modes.begin(), modes.end()))
    return op * factor;  // modes cover the whole basis in natural order

  const long cols = factor.cols();
  Dense out(factor.rows(), cols);
  Dense x(sub_side, cols), y(sub_side, cols);
  for (long base : outer) {
    for (long c = 0; c < cols; ++c) {
      const Complex* in_col = factor.col(c).data();
      Complex* xc = x.col(c).data();
      for (long l = 0; l < sub_side; ++l) xc[l] = in_col[base + sub[l]];
    }
    y.noalias() = op * x;
    for (long c = 0; c < cols; ++c) {
      Complex* out_col = out.col(c).data();
      const Complex* yc = y.col(c).data();
      for (long l = 0; l < sub_side; ++l) out_col[base + sub[l]] = yc[l];
    }
  }
  return out;
}

}  // namespace detail

// A (possibly mixed) state over a truncated multi-mode Fock basis.
//
// Stored in factored form rho = F F^dag with F of shape side x rank, which
// keeps Hermiticity and positivity structural and makes high-rank thermal
// joints tractable (a dense rho at the sides needed here would not fit).
// tail_mass accumulates all probability discarded by truncation and is
// monotone non-decreasing along a pipeline.
class TruncatedState {
 public:
  TruncatedState(std::vector<int> mode_dims, Dense factor, double tail_mass)
      : mode_dims_(std::move(mode_dims)), factor_(std::move(factor)), tail_mass_(tail_mass) {
    const long side = basis_side(mode_dims_);
    if (factor_.rows() != side)
      throw DimensionMismatchError("factor rows do not match the basis side");
    if (factor_.cols() < 1) throw DimensionMismatchError("factor needs at least one column");
    if (!(tail_mass_ >= 0.0)) throw InvalidParameterError("tail_mass must be >= 0");
  }

  // Recovers the factored form from a dense density matrix. Checks
  // Hermiticity and positivity (eigenvalues >= -1e-10), drops numerically
  // zero eigenvalues, renormalizes back to the input trace.
  static TruncatedState from_density(std::vector<int> mode_dims, const Dense& rho,
                                     double tail_mass, double drop_tol = 1e-14) {
    const long side = basis_side(mode_dims);
    if (rho.rows() != side || rho.cols() != side)
      throw DimensionMismatchError("density matrix side does not match the basis");
    const double scale = std::max(1.0, rho.cwiseAbs().maxCoeff());
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw InvalidParameterError("density matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Dense> es(rho);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double trace = ev.sum();
    if (ev.minCoeff() < -1e-10 * std::max(1.0, trace))
      throw InvalidParameterError("density matrix has a negative eigenvalue beyond tolerance");
    double kept = 0.0;
    std::vector<long> keep;
    for (long i = ev.size() - 1; i >= 0; --i) {
      if (ev[i] > drop_tol * trace) {
        keep.push_back(i);
        kept += ev[i];
      }
    }
    if (keep.empty()) throw Error("density matrix is numerically zero");
    Dense f(side, long(keep.size()));
    const double renorm = std::sqrt(trace / kept);
    for (size_t j = 0; j < keep.size(); ++j)
      f.col(long(j)) = es.eigenvectors().col(keep[j]) * (std::sqrt(ev[keep[j]]) * renorm);
    return TruncatedState(std::move(mode_dims), std::move(f),
                          tail_mass + std::max(0.0, trace - kept));
  }

  const std::vector<int>& mode_dims() const { return mode_dims_; }
  long side() const { return factor_.rows(); }
  long rank() const { return factor_.cols(); }
  const Dense& factor() const { return factor_; }
  double tail_mass() const { return tail_mass_; }
  double trace() const { return factor_.squaredNorm(); }

  void add_tail(double extra) {
    if (!(extra >= 0.0)) throw InvalidParameterError("tail increments must be >= 0");
    tail_mass_ += extra;
  }

  void rescale_trace(double target) { factor_ *= std::sqrt(target / trace()); }

  // Dense density matrix; only for sides where that is sane.
  Dense density() const {
    if (side() > kDenseSideLimit)
      throw CapacityError("density(): side " + std::to_string(side()) +
                          " exceeds the dense materialization bound");
    return factor_ * factor_.adjoint();
  }

  // Eigenvalue-truncates the factor: same state, fewer columns. Mass dropped
  // (at most drop_tol * trace per eigenvalue) is added to tail_mass.
  TruncatedState compacted(double drop_tol = 1e-14) const {
    return from_density(mode_dims_, density(), tail_mass_, drop_tol);
  }

 private:
  std::vector<int> mode_dims_;
  Dense factor_;
  double tail_mass_;
};

namespace detail {

inline int grow_until(double (*tail_of)(double, int), double param, int dim,
                      const TruncationPolicy& policy, const char* what) {
  if (dim < 1) throw InvalidParameterError("dim must be >= 1");
  double tail = tail_of(param, dim);
  if (tail < policy.tail_target) return dim;
  if (!policy.grow)
    throw TruncationOverflowError(std::string(what) + ": tail " + std::to_string(tail) +
                                  " at dim " + std::to_string(dim) +
                                  " misses the target with growth disabled");
  while (tail >= policy.tail_target) {
    if (2L * dim > policy.side_cap)
      throw TruncationOverflowError(std::string(what) +
                                    ": truncation cap reached before the tail target");
    dim *= 2;
    tail = tail_of(param, dim);
  }
  return dim;
}

inline double poisson_tail(double mean, int dim) {
  if (mean == 0.0) return 0.0;
  double w = std::exp(-mean), cum = w;
  for (int n = 1; n < dim; ++n) {
    w *= mean / n;
    cum += w;
  }
  return std::max(0.0, 1.0 - cum);
}

inline double geometric_tail(double n_th, int dim) {
  if (n_th == 0.0) return 0.0;
  const double lam = n_th / (1.0 + n_th);
  return std::pow(lam, dim);
}

inline double schmidt_tail(double N, int dim) {
  if (N == 0.0) return 0.0;
  const double lam2 = N / (N + 1.0);
  return std::pow(lam2, dim);
}

}  // namespace detail

// Coherent state |alpha> on one mode; tail_mass records the discarded
// Poisson weight before renormalization.
inline TruncatedState make_coherent(Complex alpha, int dim,
                                    const TruncationPolicy& policy = {}) {
  const double mean = std::norm(alpha);
  dim = detail::grow_until(detail::poisson_tail, mean, dim, policy, "make_coherent");
  const double tail = detail::poisson_tail(mean, dim);
  Dense f(dim, 1);
  Complex c = std::exp(Complex(-mean / 2.0, 0.0));
  f(0, 0) = c;
  for (int n = 1; n < dim; ++n) {
    c *= alpha / std::sqrt(double(n));
    f(n, 0) = c;
  }
  f /= f.norm();
  return TruncatedState({dim}, std::move(f), tail);
}

inline TruncatedState make_vacuum(int dim) { return make_coherent(0.0, dim); }

// Thermal state with occupation n_th; geometric weights renormalized on the
// kept levels. Columns whose weight is negligible are pruned (they would
// only inflate downstream ranks), with the pruned mass booked as tail.
inline TruncatedState make_thermal(double n_th, int dim,
                                   const TruncationPolicy& policy = {}) {
  if (n_th < 0.0) throw InvalidParameterError("n_th must be >= 0");
  dim = detail::grow_until(detail::geometric_tail, n_th, dim, policy, "make_thermal");
  const double tail = detail::geometric_tail(n_th, dim);
  const double lam = n_th / (1.0 + n_th);
  std::vector<double> p(static_cast<size_t>(dim));
  double w = 1.0 - lam, sum = 0.0;
  for (int n = 0; n < dim; ++n) {
    p[size_t(n)] = w;
    sum += w;
    w *= lam;
  }
  double pruned = 0.0;
  std::vector<int> cols;
  for (int n = 0; n < dim; ++n) {
    if (p[size_t(n)] / sum > 1e-32)
      cols.push_back(n);
    else
      pruned += p[size_t(n)] / sum;
  }
  Dense f = Dense::Zero(dim, long(cols.size()));
  for (size_t j = 0; j < cols.size(); ++j)
    f(cols[j], long(j)) = std::sqrt(p[size_t(cols[j])] / sum / (1.0 - pruned));
  return TruncatedState({dim}, std::move(f), tail + pruned);
}

// Two-mode squeezed vacuum with per-mode mean photon number N:
// sqrt(1-lam^2) sum lam^n |n,n> with lam = sqrt(N/(N+1)).
inline TruncatedState make_tmsv(double N, int dim_per_mode,
                                const TruncationPolicy& policy = {}) {
  if (N < 0.0) throw InvalidParameterError("N must be >= 0");
  const int dim =
      detail::grow_until(detail::schmidt_tail, N, dim_per_mode, policy, "make_tmsv");
  const double tail = detail::schmidt_tail(N, dim);
  const double lam = std::sqrt(N / (N + 1.0));
  Dense f = Dense::Zero(long(dim) * dim, 1);
  double c = 1.0;
  for (int n = 0; n < dim; ++n) {
    f(long(n) * dim + n, 0) = c;
    c *= lam;
  }
  f /= f.norm();
  return TruncatedState({dim, dim}, std::move(f), tail);
}

// Tensor product; mode lists concatenate in order.
inline TruncatedState attach_mode(const TruncatedState& a, const TruncatedState& b,
                                  long side_cap = kDefaultSideCap) {
  std::vector<int> dims = a.mode_dims();
  dims.insert(dims.end(), b.mode_dims().begin(), b.mode_dims().end());
  const long side = basis_side(dims);
  if (side > side_cap)
    throw CapacityError("attach_mode: joint side " + std::to_string(side) +
                        " exceeds the cap " + std::to_string(side_cap));
  const long ra = a.rank(), rb = b.rank(), sa = a.side(), sb = b.side();
  detail::check_entry_budget(side, ra * rb, "attach_mode");
  Dense f(side, ra * rb);
  for (long ja = 0; ja < ra; ++ja)
    for (long jb = 0; jb < rb; ++jb) {
      auto col = f.col(ja * rb + jb);
      for (long ia = 0; ia < sa; ++ia)
        col.segment(ia * sb, sb) = a.factor()(ia, ja) * b.factor().col(jb);
    }
  return TruncatedState(std::move(dims), std::move(f), a.tail_mass() + b.tail_mass());
}

// Reduced state on the kept modes (result mode order = `keep` order).
// Exact and cheap in the factored form: columns regroup, nothing is summed.
inline TruncatedState partial_trace(const TruncatedState& s, const std::vector<int>& keep) {
  if (keep.empty()) throw DimensionMismatchError("partial_trace: must keep at least one mode");
  const auto& dims = s.mode_dims();
  const auto traced = detail::complement_modes(dims.size(), keep);
  if (traced.empty()) throw DimensionMismatchError("partial_trace: nothing to trace out");
  const auto strides = detail::strides_of(dims);
  const auto keep_off = detail::subset_offsets(dims, strides, keep);
  const auto trace_off = detail::subset_offsets(dims, strides, traced);
  const long side_keep = long(keep_off.size());
  const long t_count = long(trace_off.size());

  std::vector<int> new_dims;
  for (int m : keep) new_dims.push_back(dims[size_t(m)]);
  detail::check_entry_budget(side_keep, s.rank() * t_count, "partial_trace");
  Dense f(side_keep, s.rank() * t_count);
  for (long c = 0; c < s.rank(); ++c) {
    const Complex* in_col = s.factor().col(c).data();
    for (long t = 0; t < t_count; ++t) {
      auto out_col = f.col(c * t_count + t);
      for (long r = 0; r < side_keep; ++r) out_col[r] = in_col[keep_off[r] + trace_off[t]];
    }
  }
  return TruncatedState(std::move(new_dims), std::move(f), s.tail_mass());
}

// Enlarges one mode's basis (zero padding); expectation values are unchanged,
// the headroom only matters for subsequent photon-adding channels.
inline TruncatedState pad_mode(const TruncatedState& s, int mode, int new_dim,
                               long side_cap = kDefaultSideCap) {
  const auto& dims = s.mode_dims();
  if (mode < 0 || mode >= int(dims.size()))
    throw DimensionMismatchError("pad_mode: mode index out of range");
  if (new_dim < dims[size_t(mode)])
    throw InvalidParameterError("pad_mode: new dimension would shrink the mode");
  if (new_dim == dims[size_t(mode)]) return s;
  std::vector<int> new_dims = dims;
  new_dims[size_t(mode)] = new_dim;
  if (basis_side(new_dims) > side_cap)
    throw CapacityError("pad_mode: padded side exceeds the cap");

  const auto old_strides = detail::strides_of(dims);
  const auto new_strides = detail::strides_of(new_dims);
  const std::vector<int> all = [&] {
    std::vector<int> v(dims.size());
    std::iota(v.begin(), v.end(), 0);
    return v;
  }();
  const auto old_off = detail::subset_offsets(dims, old_strides, all);
  const auto new_off = detail::subset_offsets(dims, new_strides, all);
  detail::check_entry_budget(basis_side(new_dims), s.rank(), "pad_mode");
  Dense f = Dense::Zero(basis_side(new_dims), s.rank());
  for (long c = 0; c < s.rank(); ++c)
    for (size_t i = 0; i < old_off.size(); ++i)
      f(new_off[i], c) = s.factor()(old_off[i], c);
  return TruncatedState(std::move(new_dims), std::move(f), s.tail_mass());
}

// tr(rho O) for an operator over the full basis.
inline Complex expectation(const TruncatedState& s, const ModeOperator& op) {
  if (op.mode_dims != s.mode_dims())
    throw DimensionMismatchError("expectation: operator and state mode dimensions differ");
  return (s.factor().adjoint() * (op.matrix * s.factor())).trace();
}

// tr(rho (O on `modes`)) without materializing the embedded operator.
inline Complex expectation(const TruncatedState& s, const Sparse& op,
                           const std::vector<int>& modes) {
  const Dense of = detail::apply_on_modes(s.factor(), s.mode_dims(), modes, op);
  return (s.factor().conjugate().cwiseProduct(of)).sum();
}

}  // namespace qicloak::fock
