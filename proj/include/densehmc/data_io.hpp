#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "densehmc/dense_matrix.hpp"
#include "densehmc/model.hpp"

namespace densehmc {

enum class IdxErrorKind { Io, BadMagic, Truncated, DimensionOverflow };

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  IdxErrorKind kind() const { return kind_; }

 private:
  IdxErrorKind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct RawImageSet {
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

/// Reads an unsigned-byte IDX image file (magic 0x00000803).
RawImageSet load_idx_images(const std::filesystem::path& path);
/// Reads an unsigned-byte IDX label file (magic 0x00000801).
std::vector<int> load_idx_labels(const std::filesystem::path& path);

struct DesignOptions {
  bool scale = true;      // divide pixel values by 255
  bool intercept = true;  // prepend a column of ones
};

/// Flattens each image row-major into one design-matrix row.
DenseMatrix to_design(const RawImageSet& images, DesignOptions options = {},
                      Precision precision = Precision::F64);

/// Per-column centering and scaling estimated on one matrix and applied to
/// others. Columns with zero spread are only centered.
class ColumnStandardizer {
 public:
  static ColumnStandardizer fit(const DenseMatrix& x, bool skip_first_column);
  DenseMatrix apply(const DenseMatrix& x) const;

 private:
  std::vector<double> mean_;
  std::vector<double> scale_;
  bool skip_first_ = false;
};

/// n x K indicator matrix; throws ContractError on a label outside [0, K).
DenseMatrix one_hot(const std::vector<int>& labels, std::size_t k,
                    Precision precision = Precision::F64);

/// Prepends a column of ones.
DenseMatrix with_intercept(const DenseMatrix& x);

struct SynthSpec {
  std::size_t n = 1000;
  std::size_t p = 10;
  std::size_t k = 3;
  /// Variance of the N(0, σ²) draws for both X and B.
  double coef_variance = 1e-3;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SynthData {
  Dataset data;
  DenseMatrix true_b;
  std::vector<int> labels;
};

/// X and B drawn i.i.d. N(0, σ²), B's final column zeroed, and each label
/// drawn from softmax(xᵢᵀB).
SynthData synth_generate(const SynthSpec& spec, Precision precision = Precision::F64);

/// Order-preserving split into the first n_train rows and the remainder.
std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_train);

struct LabeledTable {
  std::vector<std::string> feature_names;
  DenseMatrix features;
  std::vector<int> labels;
};

/// Delimited text with a header row; `label_column` names the integer class
/// column and every other column is a numeric feature.
LabeledTable load_csv(const std::filesystem::path& path, const std::string& label_column,
                      char delimiter = ',', Precision precision = Precision::F64);

}  // namespace densehmc
