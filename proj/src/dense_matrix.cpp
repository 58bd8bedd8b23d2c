#include "densehmc/dense_matrix.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <sstream>

namespace densehmc {

namespace {

std::atomic<std::uint64_t> g_allocations{0};

void count_allocation(std::size_t n) {
  if (n > 0) g_allocations.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

std::string_view to_string(Precision p) {
  return p == Precision::F32 ? "f32" : "f64";
}

Precision parse_precision(std::string_view s) {
  if (s == "f32" || s == "F32") return Precision::F32;
  if (s == "f64" || s == "F64") return Precision::F64;
  throw std::invalid_argument("unknown precision '" + std::string(s) + "'");
}

DenseMatrix::DenseMatrix() : elems_(std::vector<double>{}) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Precision precision)
    : rows_(rows), cols_(cols) {
  if (precision == Precision::F32)
    elems_ = std::vector<float>(rows * cols, 0.0f);
  else
    elems_ = std::vector<double>(rows * cols, 0.0);
  count_allocation(rows * cols);
}

DenseMatrix::DenseMatrix(const DenseMatrix& other)
    : rows_(other.rows_), cols_(other.cols_), elems_(other.elems_) {
  count_allocation(size());
}

DenseMatrix& DenseMatrix::operator=(const DenseMatrix& other) {
  if (this != &other) {
    rows_ = other.rows_;
    cols_ = other.cols_;
    elems_ = other.elems_;
    count_allocation(size());
  }
  return *this;
}

DenseMatrix DenseMatrix::filled(std::size_t rows, std::size_t cols, double value,
                                Precision precision) {
  DenseMatrix m(rows, cols, precision);
  m.visit([value](auto span) {
    using T = typename decltype(span)::value_type;
    std::fill(span.begin(), span.end(), static_cast<T>(value));
  });
  return m;
}

DenseMatrix DenseMatrix::identity(std::size_t n, Precision precision) {
  DenseMatrix m(n, n, precision);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

DenseMatrix DenseMatrix::from_rows(
    std::initializer_list<std::initializer_list<double>> rows, Precision precision) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  DenseMatrix m(r, c, precision);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ContractError("DenseMatrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m.set(i, j++, v);
    ++i;
  }
  return m;
}

DenseMatrix DenseMatrix::from_values(std::size_t rows, std::size_t cols,
                                     std::span<const double> values,
                                     Precision precision) {
  if (values.size() != rows * cols)
    throw ContractError("DenseMatrix::from_values: expected " +
                        std::to_string(rows * cols) + " values, got " +
                        std::to_string(values.size()));
  DenseMatrix m(rows, cols, precision);
  m.visit([&](auto span) {
    using T = typename decltype(span)::value_type;
    std::transform(values.begin(), values.end(), span.begin(),
                   [](double v) { return static_cast<T>(v); });
  });
  return m;
}

Precision DenseMatrix::precision() const {
  return std::holds_alternative<std::vector<float>>(elems_) ? Precision::F32
                                                            : Precision::F64;
}

std::string DenseMatrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_ << " " << to_string(precision());
  return os.str();
}

double DenseMatrix::operator()(std::size_t r, std::size_t c) const {
  return flat(r * cols_ + c);
}

void DenseMatrix::set(std::size_t r, std::size_t c, double value) {
  set_flat(r * cols_ + c, value);
}

double DenseMatrix::flat(std::size_t i) const {
  return visit([i](auto span) { return static_cast<double>(span[i]); });
}

void DenseMatrix::set_flat(std::size_t i, double value) {
  visit([i, value](auto span) {
    using T = typename decltype(span)::value_type;
    span[i] = static_cast<T>(value);
  });
}

DenseMatrix DenseMatrix::converted(Precision precision) const {
  if (precision == this->precision()) return *this;
  DenseMatrix out(rows_, cols_, precision);
  for (std::size_t i = 0; i < size(); ++i) out.set_flat(i, flat(i));
  return out;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix out(cols_, rows_, precision());
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out.set(j, i, (*this)(i, j));
  return out;
}

DenseMatrix DenseMatrix::row_slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_)
    throw ContractError("DenseMatrix::row_slice: rows [" + std::to_string(begin) +
                        ", " + std::to_string(end) + ") out of range for " +
                        shape_string());
  DenseMatrix out(end - begin, cols_, precision());
  visit([&](auto src) {
    using T = typename decltype(src)::value_type;
    auto dst = out.values<T>();
    std::copy(src.begin() + begin * cols_, src.begin() + end * cols_, dst.begin());
  });
  return out;
}

std::vector<double> DenseMatrix::to_vector() const {
  return visit([](auto span) { return std::vector<double>(span.begin(), span.end()); });
}

bool DenseMatrix::all_finite() const {
  return visit([](auto span) {
    return std::all_of(span.begin(), span.end(), [](auto v) { return std::isfinite(v); });
  });
}

bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.elems_ == b.elems_;
}

std::uint64_t DenseMatrix::allocation_count() {
  return g_allocations.load(std::memory_order_relaxed);
}

std::ostream& operator<<(std::ostream& os, const DenseMatrix& m) {
  os << "[" << m.shape_string() << "]";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    os << "\n ";
    for (std::size_t j = 0; j < m.cols(); ++j) os << " " << m(i, j);
  }
  return os;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError("max_abs_diff: shape mismatch " + a.shape_string() + " vs " +
                        b.shape_string());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.flat(i) - b.flat(i)));
  return worst;
}

}  // namespace densehmc
