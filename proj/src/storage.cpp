#include "densehmc/storage.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace densehmc {

namespace {

template <typename U>
void put_le(std::ostream& out, U bits) {
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U)))
    throw std::runtime_error("truncated matrix payload");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return bits;
}

void write_values(std::ostream& out, const DenseMatrix& m) {
  m.visit([&](auto span) {
    using T = typename decltype(span)::value_type;
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    for (T v : span) put_le<U>(out, std::bit_cast<U>(v));
  });
}

void read_values(std::istream& in, DenseMatrix& m) {
  m.visit([&](auto span) {
    using T = typename decltype(span)::value_type;
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    for (T& v : span) v = std::bit_cast<T>(get_le<U>(in));
  });
}

struct Header {
  std::string kind;
  std::map<std::string, std::string> fields;

  std::size_t size(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw std::runtime_error("header is missing '" + key + "'");
    return std::stoull(it->second);
  }
  Precision precision() const {
    auto it = fields.find("dtype");
    if (it == fields.end()) throw std::runtime_error("header is missing 'dtype'");
    return parse_precision(it->second);
  }
};

Header read_header(std::istream& in, const std::string& expected_kind) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing header line");
  std::istringstream words(line);
  Header h;
  std::string version;
  words >> h.kind >> version;
  if (h.kind != expected_kind)
    throw std::runtime_error("expected a " + expected_kind + " file, found '" + h.kind + "'");
  if (version != "1") throw std::runtime_error("unsupported format version " + version);
  std::string token;
  while (words >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed header token " + token);
    h.fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return in;
}

}  // namespace

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  out << "densehmc-matrix 1 rows=" << m.rows() << " cols=" << m.cols()
      << " dtype=" << to_string(m.precision()) << "\n";
  write_values(out, m);
}

DenseMatrix read_matrix(std::istream& in) {
  const Header h = read_header(in, "densehmc-matrix");
  DenseMatrix m(h.size("rows"), h.size("cols"), h.precision());
  read_values(in, m);
  return m;
}

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  write_matrix(out, m);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_matrix(in);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_samples(const std::filesystem::path& path, const StoredSamples& stored) {
  if (stored.samples.empty()) throw std::runtime_error("refusing to save an empty sample set");
  if (stored.chains.size() != stored.samples.size())
    throw std::runtime_error("one chain label is required per sample");
  const DenseMatrix& first = stored.samples.front();
  auto out = open_out(path);
  out << "densehmc-samples 1 count=" << stored.samples.size() << " rows=" << first.rows()
      << " cols=" << first.cols() << " dtype=" << to_string(first.precision()) << "\n";
  for (std::size_t s = 0; s < stored.samples.size(); ++s) {
    const DenseMatrix& m = stored.samples[s];
    if (m.rows() != first.rows() || m.cols() != first.cols() ||
        m.precision() != first.precision())
      throw std::runtime_error("samples must share one shape and precision");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(stored.chains[s]));
    write_values(out, m);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

StoredSamples load_samples(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    const Header h = read_header(in, "densehmc-samples");
    const std::size_t count = h.size("count"), rows = h.size("rows"), cols = h.size("cols");
    StoredSamples stored;
    for (std::size_t s = 0; s < count; ++s) {
      stored.chains.push_back(static_cast<int>(get_le<std::uint32_t>(in)));
      DenseMatrix m(rows, cols, h.precision());
      read_values(in, m);
      stored.samples.push_back(std::move(m));
    }
    return stored;
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace densehmc
