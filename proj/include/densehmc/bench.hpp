#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "densehmc/backend.hpp"

namespace densehmc {

enum class BenchOp { GradEval, LeapfrogUpdate };
enum class Variant { Masked, Unmasked };

std::string_view to_string(BenchOp op);
std::string_view to_string(Variant v);

struct SweepGrid {
  std::vector<std::size_t> ns;
  std::vector<std::size_t> ks;
  std::vector<std::size_t> ps;
  int repetitions = 5;
  std::vector<Variant> variants{Variant::Masked};
  Precision precision = Precision::F32;
  /// Grid points whose working set exceeds this are recorded as skipped.
  std::size_t memory_budget_bytes = std::size_t{4} << 30;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t combinations() const { return ns.size() * ks.size() * ps.size(); }
};

/// N ∈ {100, 1000, 5000, 10000}, K ∈ {2, 3, 4, 5, 10, 15, 20},
/// p ∈ {10, 50, 100, 500, 1000, 5000, 10000, 20000}.
SweepGrid default_grid();

struct TimingRecord {
  std::size_t n = 0;
  std::size_t k = 0;
  std::size_t p = 0;
  std::string backend;
  BenchOp op = BenchOp::GradEval;
  Variant variant = Variant::Masked;
  Precision precision = Precision::F32;
  double mean_s = 0.0;
  std::vector<double> rep_s;
  /// Reference-backend mean divided by this record's mean.
  std::optional<double> speedup;
  /// "ok" or "skipped:<reason>".
  std::string status = "ok";
  /// Matrix buffers allocated per timed call (not serialized).
  double allocations_per_call = 0.0;

  bool skipped() const { return status != "ok"; }
  std::string key() const;
};

/// Working-set estimate for one gradient evaluation at (n, k, p).
std::size_t estimated_bytes(std::size_t n, std::size_t k, std::size_t p, Precision precision);

/// Times grad_log_kernel alone, after one untimed warm-up call. Synthetic data
/// generation is excluded from the timed region.
TimingRecord time_gradient(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                           int reps, Variant variant = Variant::Masked,
                           Precision precision = Precision::F32, std::uint64_t seed = 1);

/// Times one full leapfrog update (L = 1), after one untimed warm-up call.
TimingRecord time_leapfrog(std::size_t n, std::size_t k, std::size_t p, const Backend& backend,
                           int reps, Variant variant = Variant::Masked,
                           Precision precision = Precision::F32, std::uint64_t seed = 1);

/// Fills `speedup` on every record that has a reference-backend counterpart.
void attach_speedups(std::vector<TimingRecord>& records);

std::string csv_header(int repetitions);
std::string csv_row(const TimingRecord& r, int repetitions);

/// Writes a header plus one row per record.
void emit_report(const std::vector<TimingRecord>& records, std::ostream& csv);
std::vector<TimingRecord> parse_report(std::istream& csv);
void print_summary(const std::vector<TimingRecord>& records, std::ostream& out);

struct SweepResult {
  std::vector<TimingRecord> records;  // everything in the output file
  std::size_t measured = 0;
  std::size_t resumed = 0;
  std::size_t skipped = 0;
};

/// Sweeps the grid over every backend, appending rows to `out_path` after each
/// grid point. Rows already present in the file are not measured again.
SweepResult run_sweep(const SweepGrid& grid,
                      const std::vector<std::shared_ptr<const Backend>>& backends,
                      const std::filesystem::path& out_path, std::ostream* progress = nullptr);

}  // namespace densehmc
