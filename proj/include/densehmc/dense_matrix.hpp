#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace densehmc {

enum class Precision { F32, F64 };

std::string_view to_string(Precision p);
Precision parse_precision(std::string_view s);

template <typename T>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? Precision::F32 : Precision::F64;
}

/// Thrown when an operation's shape or precision preconditions are violated.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a configuration field is out of range; `field()` names it.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Row-major dense matrix whose element type is chosen at runtime.
///
/// Zero-extent matrices are allowed so that an empty dataset (n = 0) flows
/// through the same matrix pipeline as a populated one.
class DenseMatrix {
 public:
  DenseMatrix();
  DenseMatrix(std::size_t rows, std::size_t cols,
              Precision precision = Precision::F64);

  DenseMatrix(const DenseMatrix& other);
  DenseMatrix& operator=(const DenseMatrix& other);
  DenseMatrix(DenseMatrix&&) noexcept = default;
  DenseMatrix& operator=(DenseMatrix&&) noexcept = default;

  static DenseMatrix filled(std::size_t rows, std::size_t cols, double value,
                            Precision precision = Precision::F64);
  static DenseMatrix identity(std::size_t n,
                              Precision precision = Precision::F64);
  static DenseMatrix from_rows(
      std::initializer_list<std::initializer_list<double>> rows,
      Precision precision = Precision::F64);
  static DenseMatrix from_values(std::size_t rows, std::size_t cols,
                                 std::span<const double> values,
                                 Precision precision = Precision::F64);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }
  bool empty() const { return size() == 0; }
  Precision precision() const;
  std::string shape_string() const;

  double operator()(std::size_t r, std::size_t c) const;
  void set(std::size_t r, std::size_t c, double value);
  double flat(std::size_t i) const;
  void set_flat(std::size_t i, double value);

  template <typename T>
  std::span<T> values() {
    auto* v = std::get_if<std::vector<T>>(&elems_);
    if (v == nullptr) throw ContractError("DenseMatrix: precision mismatch on element access");
    return {v->data(), v->size()};
  }
  template <typename T>
  std::span<const T> values() const {
    const auto* v = std::get_if<std::vector<T>>(&elems_);
    if (v == nullptr) throw ContractError("DenseMatrix: precision mismatch on element access");
    return {v->data(), v->size()};
  }

  /// Calls f(std::span<T>) with the typed storage.
  template <typename F>
  decltype(auto) visit(F&& f) {
    return std::visit([&](auto& v) { return f(std::span{v.data(), v.size()}); }, elems_);
  }
  template <typename F>
  decltype(auto) visit(F&& f) const {
    return std::visit(
        [&](const auto& v) { return f(std::span{v.data(), v.size()}); }, elems_);
  }

  DenseMatrix converted(Precision precision) const;
  DenseMatrix transposed() const;
  DenseMatrix row_slice(std::size_t begin, std::size_t end) const;
  std::vector<double> to_vector() const;
  bool all_finite() const;

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b);

  /// Number of element buffers allocated by any DenseMatrix since start-up.
  static std::uint64_t allocation_count();

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::variant<std::vector<float>, std::vector<double>> elems_;
};

std::ostream& operator<<(std::ostream& os, const DenseMatrix& m);

/// Largest elementwise |a - b|; shapes must agree.
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace densehmc
