#include <Eigen/Dense>

#include "densehmc/backend.hpp"

namespace densehmc {

namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstView = Eigen::Map<const RowMajor<T>>;
template <typename T>
using View = Eigen::Map<RowMajor<T>>;

template <typename T>
ConstView<T> view(const DenseMatrix& m) {
  return ConstView<T>(m.values<T>().data(), static_cast<Eigen::Index>(m.rows()),
                      static_cast<Eigen::Index>(m.cols()));
}

template <typename T>
View<T> view(DenseMatrix& m) {
  return View<T>(m.values<T>().data(), static_cast<Eigen::Index>(m.rows()),
                 static_cast<Eigen::Index>(m.cols()));
}

template <typename F>
decltype(auto) dispatch(const DenseMatrix& m, F&& f) {
  if (m.precision() == Precision::F32) return f(float{});
  return f(double{});
}

template <typename T, bool Log>
DenseMatrix softmax(const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols(), precision_of<T>());
  if (a.empty()) return out;
  auto in = view<T>(a);
  auto o = view<T>(out);
  auto shifted = (in.colwise() - in.rowwise().maxCoeff()).array().eval();
  auto totals = shifted.exp().rowwise().sum().eval();
  if constexpr (Log)
    o.array() = shifted.colwise() - totals.log();
  else
    o.array() = shifted.exp().colwise() / totals;
  return out;
}

}  // namespace

const BackendId& EigenBackend::id() const {
  static const BackendId kId{"eigen", {Precision::F32, Precision::F64}, true};
  return kId;
}

DenseMatrix EigenBackend::do_matmul(const DenseMatrix& a, const DenseMatrix& b) const {
  return dispatch(a, [&](auto t) {
    using T = decltype(t);
    DenseMatrix out(a.rows(), b.cols(), precision_of<T>());
    if (!out.empty()) view<T>(out).noalias() = view<T>(a) * view<T>(b);
    return out;
  });
}

DenseMatrix EigenBackend::do_matmul_transpose_left(const DenseMatrix& a,
                                                   const DenseMatrix& b) const {
  return dispatch(a, [&](auto t) {
    using T = decltype(t);
    DenseMatrix out(a.cols(), b.cols(), precision_of<T>());
    if (!out.empty()) view<T>(out).noalias() = view<T>(a).transpose() * view<T>(b);
    return out;
  });
}

DenseMatrix EigenBackend::do_row_softmax(const DenseMatrix& a) const {
  return dispatch(a, [&](auto t) { return softmax<decltype(t), false>(a); });
}

DenseMatrix EigenBackend::do_row_log_softmax(const DenseMatrix& a) const {
  return dispatch(a, [&](auto t) { return softmax<decltype(t), true>(a); });
}

DenseMatrix EigenBackend::do_elem_unary(const DenseMatrix& a, UnaryOp op) const {
  return dispatch(a, [&](auto t) {
    using T = decltype(t);
    DenseMatrix out(a.rows(), a.cols(), precision_of<T>());
    if (out.empty()) return out;
    auto x = view<T>(a).array();
    auto o = view<T>(out).array();
    switch (op) {
      case UnaryOp::Log: o = x.log(); break;
      case UnaryOp::NegLog1pSquare: o = -(x.square().log1p()); break;
      case UnaryOp::CauchyGradTerm: o = T(-2) * x / (T(1) + x.square()); break;
    }
    return out;
  });
}

DenseMatrix EigenBackend::do_elem_binary(const DenseMatrix& a, const DenseMatrix& b,
                                         BinaryOp op) const {
  return dispatch(a, [&](auto t) {
    using T = decltype(t);
    DenseMatrix out(a.rows(), a.cols(), precision_of<T>());
    if (out.empty()) return out;
    auto x = view<T>(a).array();
    auto y = view<T>(b).array();
    auto o = view<T>(out).array();
    switch (op) {
      case BinaryOp::Add: o = x + y; break;
      case BinaryOp::Sub: o = x - y; break;
      case BinaryOp::Mul: o = x * y; break;
    }
    return out;
  });
}

DenseMatrix EigenBackend::do_axpy(double alpha, const DenseMatrix& x,
                                  const DenseMatrix& y) const {
  return dispatch(x, [&](auto t) {
    using T = decltype(t);
    DenseMatrix out(x.rows(), x.cols(), precision_of<T>());
    if (!out.empty())
      view<T>(out).array() = static_cast<T>(alpha) * view<T>(x).array() + view<T>(y).array();
    return out;
  });
}

double EigenBackend::do_sum_all(const DenseMatrix& a) const {
  if (a.empty()) return 0.0;
  return dispatch(a, [&](auto t) {
    using T = decltype(t);
    return view<T>(a).template cast<double>().sum();
  });
}

double EigenBackend::do_dot_self(const DenseMatrix& v) const {
  if (v.empty()) return 0.0;
  return dispatch(v, [&](auto t) {
    using T = decltype(t);
    return view<T>(v).template cast<double>().squaredNorm();
  });
}

}  // namespace densehmc
