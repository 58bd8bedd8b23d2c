#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "densehmc/dense_matrix.hpp"

namespace densehmc {

enum class UnaryOp {
  Log,             // log(x), x > 0
  NegLog1pSquare,  // -log(1 + x^2): Cauchy log-prior kernel
  CauchyGradTerm,  // -2x / (1 + x^2): its derivative
};

enum class BinaryOp { Add, Sub, Mul };

/// Thrown by elem_unary(Log) on a non-positive entry.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, std::size_t row, std::size_t col)
      : std::domain_error(what), row_(row), col_(col) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

struct BackendId {
  std::string name;
  std::vector<Precision> precisions;
  /// True when concurrent calls on one instance are allowed.
  bool thread_safe = true;

  bool supports(Precision p) const;
};

/// Dense compute contract every hot-path operation is built from.
///
/// The public entry points validate shapes and precision, then dispatch to the
/// implementation hooks. All operations return new matrices and never modify
/// their arguments.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendId& id() const = 0;
  std::string_view name() const { return id().name; }

  DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) const;
  /// aᵀ·b without forming aᵀ.
  DenseMatrix matmul_transpose_left(const DenseMatrix& a, const DenseMatrix& b) const;
  DenseMatrix row_softmax(const DenseMatrix& a) const;
  /// Row-wise log-softmax, (a - max) - log Σ exp(a - max).
  DenseMatrix row_log_softmax(const DenseMatrix& a) const;
  DenseMatrix elem_unary(const DenseMatrix& a, UnaryOp op) const;
  DenseMatrix elem_binary(const DenseMatrix& a, const DenseMatrix& b, BinaryOp op) const;
  /// alpha·x + y
  DenseMatrix axpy(double alpha, const DenseMatrix& x, const DenseMatrix& y) const;
  double sum_all(const DenseMatrix& a) const;
  double dot_self(const DenseMatrix& v) const;

 protected:
  virtual DenseMatrix do_matmul(const DenseMatrix& a, const DenseMatrix& b) const = 0;
  virtual DenseMatrix do_matmul_transpose_left(const DenseMatrix& a,
                                               const DenseMatrix& b) const = 0;
  virtual DenseMatrix do_row_softmax(const DenseMatrix& a) const = 0;
  virtual DenseMatrix do_row_log_softmax(const DenseMatrix& a) const = 0;
  virtual DenseMatrix do_elem_unary(const DenseMatrix& a, UnaryOp op) const = 0;
  virtual DenseMatrix do_elem_binary(const DenseMatrix& a, const DenseMatrix& b,
                                     BinaryOp op) const = 0;
  virtual DenseMatrix do_axpy(double alpha, const DenseMatrix& x,
                              const DenseMatrix& y) const = 0;
  virtual double do_sum_all(const DenseMatrix& a) const = 0;
  virtual double do_dot_self(const DenseMatrix& v) const = 0;

 private:
  void require_supported(const DenseMatrix& a, std::string_view op) const;
};

/// Scalar loops with a fixed summation order; the baseline every other
/// backend is checked against.
class ReferenceBackend final : public Backend {
 public:
  const BackendId& id() const override;

 protected:
  DenseMatrix do_matmul(const DenseMatrix& a, const DenseMatrix& b) const override;
  DenseMatrix do_matmul_transpose_left(const DenseMatrix& a,
                                       const DenseMatrix& b) const override;
  DenseMatrix do_row_softmax(const DenseMatrix& a) const override;
  DenseMatrix do_row_log_softmax(const DenseMatrix& a) const override;
  DenseMatrix do_elem_unary(const DenseMatrix& a, UnaryOp op) const override;
  DenseMatrix do_elem_binary(const DenseMatrix& a, const DenseMatrix& b,
                             BinaryOp op) const override;
  DenseMatrix do_axpy(double alpha, const DenseMatrix& x,
                      const DenseMatrix& y) const override;
  double do_sum_all(const DenseMatrix& a) const override;
  double do_dot_self(const DenseMatrix& v) const override;
};

/// Vectorized backend built on Eigen's blocked GEMM and array expressions.
class EigenBackend final : public Backend {
 public:
  const BackendId& id() const override;

 protected:
  DenseMatrix do_matmul(const DenseMatrix& a, const DenseMatrix& b) const override;
  DenseMatrix do_matmul_transpose_left(const DenseMatrix& a,
                                       const DenseMatrix& b) const override;
  DenseMatrix do_row_softmax(const DenseMatrix& a) const override;
  DenseMatrix do_row_log_softmax(const DenseMatrix& a) const override;
  DenseMatrix do_elem_unary(const DenseMatrix& a, UnaryOp op) const override;
  DenseMatrix do_elem_binary(const DenseMatrix& a, const DenseMatrix& b,
                             BinaryOp op) const override;
  DenseMatrix do_axpy(double alpha, const DenseMatrix& x,
                      const DenseMatrix& y) const override;
  double do_sum_all(const DenseMatrix& a) const override;
  double do_dot_self(const DenseMatrix& v) const override;
};

}  // namespace densehmc
