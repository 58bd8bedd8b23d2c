#include "densehmc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "densehmc/data_io.hpp"
#include "densehmc/model.hpp"
#include "densehmc/sampler.hpp"

namespace densehmc {

namespace {

using Clock = std::chrono::steady_clock;
static_assert(Clock::is_steady);

struct Fixture {
  std::shared_ptr<const Dataset> data;
  DenseMatrix b;
  std::unique_ptr<Target> target;
};

Fixture make_fixture(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                     Variant variant, Precision precision, std::uint64_t seed) {
  SynthData synth = synth_generate({n, p, k, 1e-3, seed}, precision);
  Fixture f;
  f.data = std::make_shared<const Dataset>(std::move(synth.data));
  f.b = std::move(synth.true_b);
  f.target = std::make_unique<MultinomialTarget>(
      backend, f.data,
      variant == Variant::Masked ? Identifiability::Masked : Identifiability::Unmasked);
  return f;
}

TimingRecord blank_record(std::size_t n, std::size_t k, std::size_t p, std::string backend,
                          BenchOp op, Variant variant, Precision precision) {
  TimingRecord r;
  r.n = n;
  r.k = k;
  r.p = p;
  r.backend = std::move(backend);
  r.op = op;
  r.variant = variant;
  r.precision = precision;
  return r;
}

template <typename F>
TimingRecord time_calls(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                        BenchOp op, Variant variant, Precision precision, int reps, F&& call) {
  if (reps < 1) throw ConfigError("repetitions", "must be at least 1");
  TimingRecord r = blank_record(n, k, p, std::string(backend.name()), op, variant, precision);
  call();  // warm-up
  const auto allocs_before = DenseMatrix::allocation_count();
  for (int i = 0; i < reps; ++i) {
    const auto start = Clock::now();
    call();
    r.rep_s.push_back(std::chrono::duration<double>(Clock::now() - start).count());
  }
  r.allocations_per_call =
      static_cast<double>(DenseMatrix::allocation_count() - allocs_before) / reps;
  r.mean_s = std::accumulate(r.rep_s.begin(), r.rep_s.end(), 0.0) / reps;
  return r;
}

TimingRecord skipped_record(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                            BenchOp op, Variant variant, Precision precision,
                            const std::string& reason) {
  TimingRecord r = blank_record(n, k, p, std::string(backend.name()), op, variant, precision);
  r.mean_s = std::numeric_limits<double>::quiet_NaN();
  r.status = "skipped:" + reason;
  return r;
}

template <typename E>
E parse_enum(const std::string& s, std::initializer_list<E> values) {
  for (E v : values)
    if (to_string(v) == s) return v;
  throw std::runtime_error("unrecognized value '" + s + "' in benchmark CSV");
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::string_view to_string(BenchOp op) {
  return op == BenchOp::GradEval ? "grad" : "leapfrog";
}

std::string_view to_string(Variant v) { return v == Variant::Masked ? "masked" : "unmasked"; }

void SweepGrid::validate() const {
  auto positive = [](const std::vector<std::size_t>& values, const char* field) {
    if (values.empty()) throw ConfigError(field, "needs at least one value");
    for (auto v : values)
      if (v == 0) throw ConfigError(field, "values must be positive");
  };
  positive(ns, "n");
  positive(ks, "k");
  positive(ps, "p");
  for (auto k : ks)
    if (k < 2) throw ConfigError("k", "values must be at least 2");
  if (repetitions < 1) throw ConfigError("repetitions", "must be at least 1");
  if (variants.empty()) throw ConfigError("variant", "needs at least one variant");
}

SweepGrid default_grid() {
  SweepGrid g;
  g.ns = {100, 1000, 5000, 10000};
  g.ks = {2, 3, 4, 5, 10, 15, 20};
  g.ps = {10, 50, 100, 500, 1000, 5000, 10000, 20000};
  return g;
}

std::string TimingRecord::key() const {
  std::ostringstream os;
  os << n << ',' << k << ',' << p << ',' << backend << ',' << to_string(op) << ','
     << to_string(variant) << ',' << to_string(precision);
  return os.str();
}

std::size_t estimated_bytes(std::size_t n, std::size_t k, std::size_t p, Precision precision) {
  const std::size_t scalar = precision == Precision::F32 ? 4 : 8;
  // X, Y, and four n x K intermediates; B, gradient, momentum and temporaries.
  return scalar * (n * p + 5 * n * k + 8 * p * k);
}

TimingRecord time_gradient(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                           int reps, Variant variant, Precision precision, std::uint64_t seed) {
  const Fixture f = make_fixture(n, k, p, backend, variant, precision, seed);
  return time_calls(n, k, p, backend, BenchOp::GradEval, variant, precision, reps,
                    [&] { return f.target->gradient(f.b); });
}

TimingRecord time_leapfrog(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                           int reps, Variant variant, Precision precision, std::uint64_t seed) {
  const Fixture f = make_fixture(n, k, p, backend, variant, precision, seed);
  Rng rng(seed);
  const DenseMatrix eta = refresh_momentum(p, k, precision, f.target->mask(), rng);
  return time_calls(n, k, p, backend, BenchOp::LeapfrogUpdate, variant, precision, reps,
                    [&] { return leapfrog(backend, *f.target, f.b, eta, 1e-4, 1); });
}

void attach_speedups(std::vector<TimingRecord>& records) {
  auto point = [](const TimingRecord& r) {
    TimingRecord probe = r;
    probe.backend.clear();
    return probe.key();
  };
  std::map<std::string, double> reference;
  std::map<std::string, std::set<std::string>> backends_at;
  for (const auto& r : records) {
    if (r.skipped()) continue;
    backends_at[point(r)].insert(r.backend);
    if (r.backend == "reference") reference[point(r)] = r.mean_s;
  }
  for (auto& r : records) {
    if (r.skipped() || r.speedup || !(r.mean_s > 0.0)) continue;
    const auto key = point(r);
    if (backends_at[key].size() < 2) continue;
    if (auto it = reference.find(key); it != reference.end()) r.speedup = it->second / r.mean_s;
  }
}

std::string csv_header(int repetitions) {
  std::ostringstream os;
  os << "n,k,p,backend,op,variant,precision,mean_s";
  for (int i = 1; i <= repetitions; ++i) os << ",rep_s_" << i;
  os << ",speedup,status";
  return os.str();
}

std::string csv_row(const TimingRecord& r, int repetitions) {
  std::ostringstream os;
  os << r.key() << ',' << format_double(r.mean_s);
  for (int i = 0; i < repetitions; ++i)
    os << ','
       << (static_cast<std::size_t>(i) < r.rep_s.size() ? format_double(r.rep_s[i]) : "");
  os << ',' << (r.speedup ? format_double(*r.speedup) : "") << ',' << r.status;
  return os.str();
}

void emit_report(const std::vector<TimingRecord>& records, std::ostream& csv) {
  std::size_t reps = 1;
  for (const auto& r : records) reps = std::max(reps, r.rep_s.size());
  std::vector<TimingRecord> with_ratio = records;
  attach_speedups(with_ratio);
  csv << csv_header(static_cast<int>(reps)) << "\n";
  for (const auto& r : with_ratio) csv << csv_row(r, static_cast<int>(reps)) << "\n";
}

std::vector<TimingRecord> parse_report(std::istream& csv) {
  std::string line;
  std::vector<TimingRecord> records;
  if (!std::getline(csv, line)) return records;
  const auto header = split_csv(line);
  const std::size_t fixed = 8;
  const auto expected = split_csv(csv_header(0));
  if (header.size() < fixed + 2 ||
      !std::equal(expected.begin(), expected.begin() + fixed, header.begin()) ||
      header[header.size() - 2] != "speedup" || header.back() != "status")
    throw std::runtime_error("unrecognized benchmark CSV header: " + line);
  const std::size_t reps = header.size() - fixed - 2;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw std::runtime_error("benchmark CSV row has " + std::to_string(f.size()) +
                               " fields, expected " + std::to_string(header.size()));
    TimingRecord r;
    r.n = std::stoull(f[0]);
    r.k = std::stoull(f[1]);
    r.p = std::stoull(f[2]);
    r.backend = f[3];
    r.op = parse_enum(f[4], {BenchOp::GradEval, BenchOp::LeapfrogUpdate});
    r.variant = parse_enum(f[5], {Variant::Masked, Variant::Unmasked});
    r.precision = parse_precision(f[6]);
    r.mean_s = f[7].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[7]);
    for (std::size_t i = 0; i < reps; ++i)
      if (!f[fixed + i].empty()) r.rep_s.push_back(std::stod(f[fixed + i]));
    if (!f[fixed + reps].empty()) r.speedup = std::stod(f[fixed + reps]);
    r.status = f[fixed + reps + 1];
    records.push_back(std::move(r));
  }
  return records;
}

void print_summary(const std::vector<TimingRecord>& records, std::ostream& out) {
  out << std::left << std::setw(7) << "n" << std::setw(5) << "k" << std::setw(7) << "p"
      << std::setw(11) << "backend" << std::setw(10) << "op" << std::setw(10) << "variant"
      << std::right << std::setw(13) << "mean_s" << std::setw(10) << "speedup"
      << std::setw(9) << "allocs" << "\n";
  for (const auto& r : records) {
    out << std::left << std::setw(7) << r.n << std::setw(5) << r.k << std::setw(7) << r.p
        << std::setw(11) << r.backend << std::setw(10) << to_string(r.op) << std::setw(10)
        << to_string(r.variant) << std::right;
    if (r.skipped()) {
      out << "  " << r.status << "\n";
      continue;
    }
    out << std::setw(13) << std::scientific << std::setprecision(3) << r.mean_s
        << std::defaultfloat << std::setw(10);
    if (r.speedup)
      out << std::fixed << std::setprecision(2) << *r.speedup << std::defaultfloat;
    else
      out << "-";
    out << std::setw(9) << std::setprecision(4) << r.allocations_per_call << "\n";
  }
}

SweepResult run_sweep(const SweepGrid& grid,
                      const std::vector<std::shared_ptr<const Backend>>& backends,
                      const std::filesystem::path& out_path, std::ostream* progress) {
  grid.validate();
  if (backends.empty()) throw ConfigError("backend", "needs at least one backend");

  SweepResult result;
  std::set<std::string> done;
  const bool resuming = std::filesystem::exists(out_path) && std::filesystem::file_size(out_path) > 0;
  if (resuming) {
    std::ifstream in(out_path);
    std::string first;
    std::getline(in, first);
    if (first != csv_header(grid.repetitions))
      throw std::runtime_error(out_path.string() +
                               " was written with a different column layout; refusing to append");
    in.seekg(0);
    result.records = parse_report(in);
    for (const auto& r : result.records) done.insert(r.key());
  }

  std::ofstream out(out_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write " + out_path.string());
  if (!resuming) out << csv_header(grid.repetitions) << "\n" << std::flush;

  for (auto n : grid.ns)
    for (auto k : grid.ks)
      for (auto p : grid.ps)
        for (auto variant : grid.variants) {
          std::vector<TimingRecord> batch;
          for (const auto& backend : backends) {
            for (auto op : {BenchOp::GradEval, BenchOp::LeapfrogUpdate}) {
              const TimingRecord probe = blank_record(n, k, p, std::string(backend->name()), op,
                                                     variant, grid.precision);
              if (done.count(probe.key())) {
                ++result.resumed;
                continue;
              }
              TimingRecord r;
              if (estimated_bytes(n, k, p, grid.precision) > grid.memory_budget_bytes) {
                r = skipped_record(n, k, p, *backend, op, variant, grid.precision,
                                   "memory_budget");
              } else {
                try {
                  r = op == BenchOp::GradEval
                          ? time_gradient(n, k, p, *backend, grid.repetitions, variant,
                                          grid.precision, grid.seed)
                          : time_leapfrog(n, k, p, *backend, grid.repetitions, variant,
                                          grid.precision, grid.seed);
                } catch (const std::bad_alloc&) {
                  r = skipped_record(n, k, p, *backend, op, variant, grid.precision,
                                     "allocation_failure");
                }
              }
              if (r.skipped())
                ++result.skipped;
              else
                ++result.measured;
              batch.push_back(std::move(r));
            }
          }
          // Ratios may refer to reference rows written by an earlier run.
          std::vector<TimingRecord> pool = result.records;
          pool.insert(pool.end(), batch.begin(), batch.end());
          attach_speedups(pool);
          for (std::size_t i = 0; i < batch.size(); ++i) {
            batch[i].speedup = pool[result.records.size() + i].speedup;
            out << csv_row(batch[i], grid.repetitions) << "\n";
            if (progress) *progress << csv_row(batch[i], grid.repetitions) << "\n";
            done.insert(batch[i].key());
          }
          out << std::flush;
          result.records.insert(result.records.end(), batch.begin(), batch.end());
        }
  return result;
}

}  // namespace densehmc
