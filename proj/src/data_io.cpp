#include "densehmc/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>

#include "densehmc/sampler.hpp"

namespace densehmc {

namespace {

struct IdxArray {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> payload;
};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

IdxArray read_idx(const std::filesystem::path& path, std::uint32_t expected_magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorKind::Io, "cannot open IDX file " + path.string());
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  const std::string where = " in " + path.string();
  if (bytes.size() < 4) throw IdxError(IdxErrorKind::Truncated, "missing IDX magic" + where);

  const std::uint32_t magic = read_be32(bytes.data());
  if (magic != expected_magic) {
    std::ostringstream msg;
    msg << "bad IDX magic 0x" << std::hex << magic << ", expected 0x" << expected_magic << where;
    throw IdxError(IdxErrorKind::BadMagic, msg.str());
  }
  const std::size_t ndims = magic & 0xff;
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header)
    throw IdxError(IdxErrorKind::Truncated, "truncated IDX dimension header" + where);

  IdxArray out;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const std::size_t dim = read_be32(bytes.data() + 4 + 4 * d);
    // Cap at 2^40 elements; anything larger is a corrupt header, not a dataset.
    constexpr std::size_t kMaxElements = std::size_t{1} << 40;
    if (dim != 0 && total > kMaxElements / dim)
      throw IdxError(IdxErrorKind::DimensionOverflow, "IDX dimensions overflow" + where);
    total *= dim;
    out.dims.push_back(dim);
  }
  if (bytes.size() - header < total)
    throw IdxError(IdxErrorKind::Truncated,
                   "IDX payload has " + std::to_string(bytes.size() - header) + " bytes, header "
                   "promises " + std::to_string(total) + where);
  out.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                     bytes.begin() + static_cast<std::ptrdiff_t>(header + total));
  return out;
}

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delimiter)) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == delimiter) fields.emplace_back();
  return fields;
}

}  // namespace

RawImageSet load_idx_images(const std::filesystem::path& path) {
  IdxArray arr = read_idx(path, kIdxImageMagic);
  RawImageSet set;
  set.count = arr.dims[0];
  set.height = arr.dims[1];
  set.width = arr.dims[2];
  set.pixels = std::move(arr.payload);
  return set;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const IdxArray arr = read_idx(path, kIdxLabelMagic);
  return {arr.payload.begin(), arr.payload.end()};
}

DenseMatrix to_design(const RawImageSet& images, DesignOptions options, Precision precision) {
  const std::size_t features = images.height * images.width;
  const std::size_t offset = options.intercept ? 1 : 0;
  DenseMatrix x(images.count, features + offset, precision);
  const double factor = options.scale ? 1.0 / 255.0 : 1.0;
  x.visit([&](auto span) {
    using T = typename decltype(span)::value_type;
    for (std::size_t i = 0; i < images.count; ++i) {
      T* row = span.data() + i * (features + offset);
      if (options.intercept) row[0] = T(1);
      const std::uint8_t* src = images.pixels.data() + i * features;
      for (std::size_t j = 0; j < features; ++j)
        row[offset + j] = static_cast<T>(static_cast<double>(src[j]) * factor);
    }
  });
  return x;
}

ColumnStandardizer ColumnStandardizer::fit(const DenseMatrix& x, bool skip_first_column) {
  ColumnStandardizer s;
  s.skip_first_ = skip_first_column;
  s.mean_.assign(x.cols(), 0.0);
  s.scale_.assign(x.cols(), 1.0);
  const double n = static_cast<double>(x.rows());
  if (x.rows() == 0) return s;
  for (std::size_t j = skip_first_column ? 1 : 0; j < x.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) sum += x(i, j);
    const double mean = sum / n;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) ss += (x(i, j) - mean) * (x(i, j) - mean);
    const double sd = std::sqrt(ss / n);
    s.mean_[j] = mean;
    s.scale_[j] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

DenseMatrix ColumnStandardizer::apply(const DenseMatrix& x) const {
  if (x.cols() != mean_.size())
    throw ContractError("ColumnStandardizer: fitted on " + std::to_string(mean_.size()) +
                        " columns, got " + x.shape_string());
  DenseMatrix out = x;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = skip_first_ ? 1 : 0; j < x.cols(); ++j)
      out.set(i, j, (x(i, j) - mean_[j]) / scale_[j]);
  return out;
}

DenseMatrix one_hot(const std::vector<int>& labels, std::size_t k, Precision precision) {
  DenseMatrix y(labels.size(), k, precision);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k)
      throw ContractError("one_hot: label " + std::to_string(label) + " at row " +
                          std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
    y.set(i, static_cast<std::size_t>(label), 1.0);
  }
  return y;
}

DenseMatrix with_intercept(const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols() + 1, x.precision());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out.set(i, 0, 1.0);
    for (std::size_t j = 0; j < x.cols(); ++j) out.set(i, j + 1, x(i, j));
  }
  return out;
}

void SynthSpec::validate() const {
  if (n < 1) throw ConfigError("n", "must be at least 1");
  if (p < 1) throw ConfigError("p", "must be at least 1");
  if (k < 2) throw ConfigError("k", "must be at least 2");
  if (!(coef_variance > 0.0) || !std::isfinite(coef_variance))
    throw ConfigError("coef_variance", "must be positive");
}

SynthData synth_generate(const SynthSpec& spec, Precision precision) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> draw(0.0, std::sqrt(spec.coef_variance));

  DenseMatrix x(spec.n, spec.p, precision);
  for (std::size_t i = 0; i < x.size(); ++i) x.set_flat(i, draw(rng));
  DenseMatrix b(spec.p, spec.k, precision);
  for (std::size_t j = 0; j < spec.p; ++j)
    for (std::size_t c = 0; c + 1 < spec.k; ++c) b.set(j, c, draw(rng));

  const DenseMatrix probs = softmax_probs(ReferenceBackend{}, x, b);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> labels(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const double target = u(rng);
    double cumulative = 0.0;
    std::size_t c = 0;
    for (; c + 1 < spec.k; ++c) {
      cumulative += probs(i, c);
      if (target < cumulative) break;
    }
    labels[i] = static_cast<int>(c);
  }
  SynthData out{{std::move(x), one_hot(labels, spec.k, precision)}, std::move(b), labels};
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& data, std::size_t n_train) {
  if (n_train == 0 || n_train >= data.n())
    throw ContractError("split: n_train must lie in (0, " + std::to_string(data.n()) +
                        "), got " + std::to_string(n_train));
  return {Dataset{data.x.row_slice(0, n_train), data.y.row_slice(0, n_train)},
          Dataset{data.x.row_slice(n_train, data.n()), data.y.row_slice(n_train, data.n())}};
}

LabeledTable load_csv(const std::filesystem::path& path, const std::string& label_column,
                      char delimiter, Precision precision) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("CSV file " + path.string() + " is empty");
  const auto header = split_line(line, delimiter);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end())
    throw std::runtime_error("CSV file " + path.string() + " has no column '" + label_column +
                             "'");
  const std::size_t label_idx = static_cast<std::size_t>(label_it - header.begin());

  LabeledTable table;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != label_idx) table.feature_names.push_back(header[j]);

  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_line(line, delimiter);
    if (fields.size() != header.size())
      throw std::runtime_error("CSV line " + std::to_string(line_no) + " has " +
                               std::to_string(fields.size()) + " fields, header has " +
                               std::to_string(header.size()));
    for (std::size_t j = 0; j < fields.size(); ++j) {
      try {
        std::size_t used = 0;
        if (j == label_idx) {
          table.labels.push_back(std::stoi(fields[j], &used));
        } else {
          values.push_back(std::stod(fields[j], &used));
        }
        if (used != fields[j].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::runtime_error("CSV line " + std::to_string(line_no) + ": cannot parse '" +
                                 fields[j] + "' in column '" + header[j] + "'");
      }
    }
  }
  table.features = DenseMatrix::from_values(table.labels.size(), table.feature_names.size(),
                                            values, precision);
  return table;
}

}  // namespace densehmc
