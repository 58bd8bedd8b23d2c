#include "densehmc/backend.hpp"

#include <algorithm>

namespace densehmc {

namespace {

std::string shapes(const DenseMatrix& a, const DenseMatrix& b) {
  return a.shape_string() + " and " + b.shape_string();
}

void require_same_precision(const DenseMatrix& a, const DenseMatrix& b,
                            std::string_view op) {
  if (a.precision() != b.precision())
    throw ContractError(std::string(op) + ": precision mismatch between " + shapes(a, b));
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError(std::string(op) + ": shape mismatch between " + shapes(a, b));
  require_same_precision(a, b, op);
}

}  // namespace

bool BackendId::supports(Precision p) const {
  return std::find(precisions.begin(), precisions.end(), p) != precisions.end();
}

void Backend::require_supported(const DenseMatrix& a, std::string_view op) const {
  if (!id().supports(a.precision()))
    throw ContractError(std::string(op) + ": backend '" + id().name +
                        "' does not support " + std::string(to_string(a.precision())));
}

DenseMatrix Backend::matmul(const DenseMatrix& a, const DenseMatrix& b) const {
  if (a.cols() != b.rows())
    throw ContractError("matmul: inner dimensions differ for " + shapes(a, b));
  require_same_precision(a, b, "matmul");
  require_supported(a, "matmul");
  return do_matmul(a, b);
}

DenseMatrix Backend::matmul_transpose_left(const DenseMatrix& a,
                                           const DenseMatrix& b) const {
  if (a.rows() != b.rows())
    throw ContractError("matmul_transpose_left: row counts differ for " + shapes(a, b));
  require_same_precision(a, b, "matmul_transpose_left");
  require_supported(a, "matmul_transpose_left");
  return do_matmul_transpose_left(a, b);
}

DenseMatrix Backend::row_softmax(const DenseMatrix& a) const {
  require_supported(a, "row_softmax");
  return do_row_softmax(a);
}

DenseMatrix Backend::row_log_softmax(const DenseMatrix& a) const {
  require_supported(a, "row_log_softmax");
  return do_row_log_softmax(a);
}

DenseMatrix Backend::elem_unary(const DenseMatrix& a, UnaryOp op) const {
  require_supported(a, "elem_unary");
  if (op == UnaryOp::Log) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a.flat(i) > 0.0)) {
        const std::size_t r = i / a.cols(), c = i % a.cols();
        throw DomainError("elem_unary(Log): non-positive entry " +
                              std::to_string(a.flat(i)) + " at (" + std::to_string(r) +
                              ", " + std::to_string(c) + ")",
                          r, c);
      }
    }
  }
  return do_elem_unary(a, op);
}

DenseMatrix Backend::elem_binary(const DenseMatrix& a, const DenseMatrix& b,
                                 BinaryOp op) const {
  require_same_shape(a, b, "elem_binary");
  require_supported(a, "elem_binary");
  return do_elem_binary(a, b, op);
}

DenseMatrix Backend::axpy(double alpha, const DenseMatrix& x, const DenseMatrix& y) const {
  require_same_shape(x, y, "axpy");
  require_supported(x, "axpy");
  return do_axpy(alpha, x, y);
}

double Backend::sum_all(const DenseMatrix& a) const {
  require_supported(a, "sum_all");
  return do_sum_all(a);
}

double Backend::dot_self(const DenseMatrix& v) const {
  if (v.rows() != 1 && v.cols() != 1)
    throw ContractError("dot_self: expected a single row or column, got " + v.shape_string());
  require_supported(v, "dot_self");
  return do_dot_self(v);
}

}  // namespace densehmc
