#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "densehmc/bench.hpp"
#include "densehmc/data_io.hpp"
#include "densehmc/sampler.hpp"
#include "densehmc/storage.hpp"
#include "json.hpp"

namespace densehmc {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Where a dataset comes from. Exactly one of `dir`, `idx_images` or `csv`
/// must be set.
struct DataSource {
  /// Directory holding x.dmat and y.dmat as written by `synth`.
  std::filesystem::path dir;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
  std::filesystem::path csv;
  std::string label_column = "label";
  char delimiter = ',';
  /// Keep only the first `limit` rows (0 keeps all).
  std::size_t limit = 0;
  /// Number of classes for IDX/CSV input; 0 infers max label + 1.
  std::size_t classes = 0;
  bool intercept = true;
  bool scale = true;
  bool standardize = false;

  void validate() const;
};

struct LoadedData {
  Dataset data;
  std::vector<int> labels;
};

LoadedData load_data(const DataSource& source, Precision precision);

struct SynthOptions {
  SynthSpec spec;
  std::filesystem::path out_dir;
  Precision precision = Precision::F64;
};

struct FitOptions {
  DataSource source;
  /// Rows used for fitting; the remainder is the held-out set (0 uses all).
  std::size_t n_train = 0;
  HmcConfig hmc;
  std::string backend = "reference";
  int chains = 1;
  std::filesystem::path out_dir;
  /// Starting coefficients; zero when absent.
  std::optional<DenseMatrix> init;
};

struct RunReport {
  double acceptance_burnin = 0.0;
  double acceptance_sampling = 0.0;
  long accepts = 0;
  long iterations = 0;
  std::size_t divergences = 0;
  std::vector<double> log_kernel_trace;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  double burnin_seconds = 0.0;
  double sampling_seconds = 0.0;
  std::uint64_t seed = 0;
  nlohmann::json config;

  nlohmann::json to_json() const;
};

struct FitResult {
  StoredSamples stored;
  RunReport report;
};

/// Acceptance band used for tuning guidance; values outside only warn.
inline constexpr double kAcceptanceLow = 0.65;
inline constexpr double kAcceptanceHigh = 0.75;

FitResult run_fit(const FitOptions& options, std::ostream& log);

struct PredictOptions {
  std::filesystem::path samples;
  DataSource source;
  std::string backend = "reference";
  std::filesystem::path out_classes;
};

struct PredictResult {
  std::vector<int> classes;
  std::optional<double> accuracy;
};

PredictResult run_predict(const PredictOptions& options);

struct ValidateOptions {
  std::size_t dim = 10;
  HmcConfig hmc;
  std::string backend = "reference";
  int rwmh_iters = 50000;
  double rwmh_scale = 0.75;

  double mean_tolerance = 0.05;
  double variance_low = 0.9;
  double variance_high = 1.1;
  double acceptance_low = 0.6;
  double acceptance_high = 0.99;
  /// HMC and RWMH means must agree within this many combined standard errors.
  double agreement_sigmas = 4.0;

  /// Settings for the standard-Gaussian self-test: 5000 draws, ε = 0.1, L = 20.
  static ValidateOptions defaults();
};

struct MomentSummary {
  std::vector<double> mean;
  std::vector<double> variance;
  /// Batch-means standard error of each coordinate mean.
  std::vector<double> mean_se;
  double acceptance = 0.0;
};

MomentSummary summarize_moments(const SampleStore& store, int batches = 50);

struct ValidationReport {
  MomentSummary hmc;
  MomentSummary rwmh;
  bool means_ok = false;
  bool variances_ok = false;
  bool acceptance_ok = false;
  bool agreement_ok = false;
  double max_abs_mean = 0.0;
  double min_variance = 0.0;
  double max_variance = 0.0;
  double max_agreement_z = 0.0;

  /// Moment and agreement checks only; `acceptance_ok` is reported, not gated.
  bool passed() const { return means_ok && variances_ok && agreement_ok; }
  nlohmann::json to_json() const;
};

ValidationReport run_validate(const ValidateOptions& options);

struct BenchOptions {
  SweepGrid grid = default_grid();
  std::vector<std::string> backends{"reference"};
  std::filesystem::path out;
};

int cmd_synth(const SynthOptions& options, std::ostream& out);
int cmd_fit(const FitOptions& options, std::ostream& out);
int cmd_predict(const PredictOptions& options, std::ostream& out);
int cmd_validate(const ValidateOptions& options, std::ostream& out);
int cmd_bench(const BenchOptions& options, std::ostream& out);

}  // namespace densehmc
