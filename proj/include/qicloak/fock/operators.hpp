#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qicloak/errors.hpp"

namespace qicloak::fock {

using Complex = std::complex<double>;
using Dense = Eigen::MatrixXcd;
using DenseVec = Eigen::VectorXcd;
using Sparse = Eigen::SparseMatrix<Complex>;

// Checked product of per-mode basis sizes.
inline long basis_side(const std::vector<int>& mode_dims) {
  if (mode_dims.empty()) throw DimensionMismatchError("state needs at least one mode");
  long side = 1;
  for (int d : mode_dims) {
    if (d < 1) throw InvalidParameterError("mode dimension must be >= 1");
    if (side > (1L << 40) / d) throw CapacityError("basis side overflows sane bounds");
    side *= d;
  }
  return side;
}

// A dense operator over the tensor-product basis of mode_dims.
struct ModeOperator {
  std::vector<int> mode_dims;
  Dense matrix;
  std::string label;

  ModeOperator(std::vector<int> dims, Dense m, std::string name = {})
      : mode_dims(std::move(dims)), matrix(std::move(m)), label(std::move(name)) {
    const long side = basis_side(mode_dims);
    if (matrix.rows() != side || matrix.cols() != side)
      throw DimensionMismatchError("operator matrix side " + std::to_string(matrix.rows()) +
                                   " does not match basis side " + std::to_string(side));
  }

  long side() const { return matrix.rows(); }
};

// Single-mode ladder operator; entries a[n-1, n] = sqrt(n).
inline Dense annihilation_matrix(int dim) {
  if (dim < 2) throw InvalidParameterError("ladder operator needs dim >= 2");
  Dense a = Dense::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
  return a;
}

inline ModeOperator build_annihilation(int dim) {
  return ModeOperator({dim}, annihilation_matrix(dim), "a");
}

inline Dense creation_matrix(int dim) { return annihilation_matrix(dim).adjoint(); }

inline Dense number_matrix(int dim) {
  if (dim < 1) throw InvalidParameterError("number operator needs dim >= 1");
  Dense n = Dense::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = double(k);
  return n;
}

// Quadratures: x = (a + a^dag)/sqrt(2), p = (a - a^dag)/(i sqrt(2)).
inline Dense position_matrix(int dim) {
  const Dense a = annihilation_matrix(dim);
  return (a + a.adjoint()) / std::sqrt(2.0);
}

inline Dense momentum_matrix(int dim) {
  const Dense a = annihilation_matrix(dim);
  return (a - a.adjoint()) * (Complex(0.0, -1.0) / std::sqrt(2.0));
}

inline Dense kron(const Dense& a, const Dense& b) {
  Dense out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Lifts a single-mode operator to the full tensor basis at position `mode`.
inline ModeOperator embed(const Dense& op, const std::vector<int>& mode_dims, int mode,
                          std::string label = {}) {
  if (mode < 0 || mode >= int(mode_dims.size()))
    throw DimensionMismatchError("embed: mode index out of range");
  if (op.rows() != mode_dims[size_t(mode)] || op.cols() != op.rows())
    throw DimensionMismatchError("embed: operator does not match the target mode dimension");
  Dense acc = Dense::Identity(1, 1);
  for (size_t m = 0; m < mode_dims.size(); ++m) {
    if (int(m) == mode)
      acc = kron(acc, op);
    else
      acc = kron(acc, Dense::Identity(mode_dims[m], mode_dims[m]));
  }
  return ModeOperator(mode_dims, std::move(acc), std::move(label));
}

inline Sparse to_sparse(const Dense& m, double prune = 1e-300) {
  Sparse s = m.sparseView(1.0, prune);
  s.makeCompressed();
  return s;
}

inline Sparse sparse_kron(const Sparse& a, const Sparse& b) {
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(size_t(a.nonZeros()) * size_t(b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (Sparse::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (Sparse::InnerIterator ib(b, kb); ib; ++ib)
          trips.emplace_back(ia.row() * b.rows() + ib.row(),
                             ia.col() * b.cols() + ib.col(), ia.value() * ib.value());
  Sparse out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

}  // namespace qicloak::fock
