#include <algorithm>
#include <cmath>
#include <limits>

#include "densehmc/backend.hpp"

namespace densehmc {

namespace {

// Typed dispatch: f<T>() with T matching the precision of `m`.
template <typename F>
decltype(auto) dispatch(const DenseMatrix& m, F&& f) {
  if (m.precision() == Precision::F32) return f(float{});
  return f(double{});
}

template <typename T>
DenseMatrix matmul_impl(const DenseMatrix& a, const DenseMatrix& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  DenseMatrix out(m, n, precision_of<T>());
  auto av = a.values<T>();
  auto bv = b.values<T>();
  auto ov = out.values<T>();
  std::vector<double> acc(n);
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = av[i * k + l];
      const T* brow = bv.data() + l * n;
      for (std::size_t j = 0; j < n; ++j) acc[j] += ail * static_cast<double>(brow[j]);
    }
    for (std::size_t j = 0; j < n; ++j) ov[i * n + j] = static_cast<T>(acc[j]);
  }
  return out;
}

template <typename T>
DenseMatrix matmul_tl_impl(const DenseMatrix& a, const DenseMatrix& b) {
  // a is k x m, b is k x n, result m x n = aᵀ b.
  const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
  auto av = a.values<T>();
  auto bv = b.values<T>();
  std::vector<double> acc(m * n, 0.0);
  for (std::size_t l = 0; l < k; ++l) {
    const T* arow = av.data() + l * m;
    const T* brow = bv.data() + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double ali = arow[i];
      double* crow = acc.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += ali * static_cast<double>(brow[j]);
    }
  }
  DenseMatrix out(m, n, precision_of<T>());
  auto ov = out.values<T>();
  std::transform(acc.begin(), acc.end(), ov.begin(), [](double v) { return static_cast<T>(v); });
  return out;
}

template <typename T, bool Log>
DenseMatrix softmax_impl(const DenseMatrix& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  DenseMatrix out(rows, cols, precision_of<T>());
  auto av = a.values<T>();
  auto ov = out.values<T>();
  for (std::size_t i = 0; i < rows; ++i) {
    const T* in = av.data() + i * cols;
    T* o = ov.data() + i * cols;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) mx = std::max(mx, static_cast<double>(in[j]));
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) total += std::exp(static_cast<double>(in[j]) - mx);
    if constexpr (Log) {
      const double log_total = std::log(total);
      for (std::size_t j = 0; j < cols; ++j)
        o[j] = static_cast<T>((static_cast<double>(in[j]) - mx) - log_total);
    } else {
      for (std::size_t j = 0; j < cols; ++j)
        o[j] = static_cast<T>(std::exp(static_cast<double>(in[j]) - mx) / total);
    }
  }
  return out;
}

template <typename T>
DenseMatrix unary_impl(const DenseMatrix& a, UnaryOp op) {
  DenseMatrix out(a.rows(), a.cols(), precision_of<T>());
  auto av = a.values<T>();
  auto ov = out.values<T>();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    double y = 0.0;
    switch (op) {
      case UnaryOp::Log: y = std::log(x); break;
      case UnaryOp::NegLog1pSquare: y = -std::log1p(x * x); break;
      case UnaryOp::CauchyGradTerm: y = -2.0 * x / (1.0 + x * x); break;
    }
    ov[i] = static_cast<T>(y);
  }
  return out;
}

template <typename T>
DenseMatrix binary_impl(const DenseMatrix& a, const DenseMatrix& b, BinaryOp op) {
  DenseMatrix out(a.rows(), a.cols(), precision_of<T>());
  auto av = a.values<T>();
  auto bv = b.values<T>();
  auto ov = out.values<T>();
  for (std::size_t i = 0; i < av.size(); ++i) {
    switch (op) {
      case BinaryOp::Add: ov[i] = av[i] + bv[i]; break;
      case BinaryOp::Sub: ov[i] = av[i] - bv[i]; break;
      case BinaryOp::Mul: ov[i] = av[i] * bv[i]; break;
    }
  }
  return out;
}

template <typename T>
DenseMatrix axpy_impl(double alpha, const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix out(x.rows(), x.cols(), precision_of<T>());
  auto xv = x.values<T>();
  auto yv = y.values<T>();
  auto ov = out.values<T>();
  for (std::size_t i = 0; i < xv.size(); ++i)
    ov[i] = static_cast<T>(alpha * static_cast<double>(xv[i]) + static_cast<double>(yv[i]));
  return out;
}

}  // namespace

const BackendId& ReferenceBackend::id() const {
  static const BackendId kId{"reference", {Precision::F32, Precision::F64}, true};
  return kId;
}

DenseMatrix ReferenceBackend::do_matmul(const DenseMatrix& a, const DenseMatrix& b) const {
  return dispatch(a, [&](auto t) { return matmul_impl<decltype(t)>(a, b); });
}

DenseMatrix ReferenceBackend::do_matmul_transpose_left(const DenseMatrix& a,
                                                       const DenseMatrix& b) const {
  return dispatch(a, [&](auto t) { return matmul_tl_impl<decltype(t)>(a, b); });
}

DenseMatrix ReferenceBackend::do_row_softmax(const DenseMatrix& a) const {
  return dispatch(a, [&](auto t) { return softmax_impl<decltype(t), false>(a); });
}

DenseMatrix ReferenceBackend::do_row_log_softmax(const DenseMatrix& a) const {
  return dispatch(a, [&](auto t) { return softmax_impl<decltype(t), true>(a); });
}

DenseMatrix ReferenceBackend::do_elem_unary(const DenseMatrix& a, UnaryOp op) const {
  return dispatch(a, [&](auto t) { return unary_impl<decltype(t)>(a, op); });
}

DenseMatrix ReferenceBackend::do_elem_binary(const DenseMatrix& a, const DenseMatrix& b,
                                             BinaryOp op) const {
  return dispatch(a, [&](auto t) { return binary_impl<decltype(t)>(a, b, op); });
}

DenseMatrix ReferenceBackend::do_axpy(double alpha, const DenseMatrix& x,
                                      const DenseMatrix& y) const {
  return dispatch(x, [&](auto t) { return axpy_impl<decltype(t)>(alpha, x, y); });
}

// Row-major sequential accumulation in double.
double ReferenceBackend::do_sum_all(const DenseMatrix& a) const {
  return a.visit([](auto span) {
    double total = 0.0;
    for (auto v : span) total += static_cast<double>(v);
    return total;
  });
}

double ReferenceBackend::do_dot_self(const DenseMatrix& v) const {
  return v.visit([](auto span) {
    double total = 0.0;
    for (auto x : span) total += static_cast<double>(x) * static_cast<double>(x);
    return total;
  });
}

}  // namespace densehmc
