#include "densehmc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>
#include <tuple>

#include "densehmc/conformance.hpp"
#include "densehmc/model.hpp"

namespace densehmc {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t infer_classes(const std::vector<int>& labels, std::size_t requested) {
  if (requested != 0) return requested;
  if (labels.empty()) return 0;
  return static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
}

template <typename T>
std::vector<T> truncated(std::vector<T> v, std::size_t limit) {
  if (limit != 0 && v.size() > limit) v.resize(limit);
  return v;
}

nlohmann::json config_json(const FitOptions& o) {
  const HmcConfig& c = o.hmc;
  return {
      {"epsilon_burnin", c.epsilon_burnin},
      {"epsilon_sampling", c.epsilon_sampling},
      {"leapfrog_steps", c.leapfrog_steps},
      {"burnin_iters", c.burnin_iters},
      {"sample_iters", c.sample_iters},
      {"anneal_t0", c.anneal_t0},
      {"anneal_r", c.anneal_r},
      {"thin", c.thin},
      {"seed", c.seed},
      {"precision", std::string(to_string(c.precision))},
      {"backend", o.backend},
      {"chains", o.chains},
      {"n_train", o.n_train},
  };
}

struct ChainOutput {
  SampleStore store;
  long accepts = 0;
  double burnin_seconds = 0.0;
  double sampling_seconds = 0.0;
};

ChainOutput run_timed_chain(const HmcConfig& config, const Target& target, const Backend& backend,
                            const DenseMatrix& init) {
  ChainOutput out;
  ChainState state = init_chain(backend, target, init, config.seed, config.anneal_t0);
  auto start = Clock::now();
  for (int i = 0; i < config.burnin_iters; ++i)
    out.store.records.push_back(hmc_iteration(state, config, target, backend, Phase::Burnin));
  out.burnin_seconds = seconds_since(start);
  start = Clock::now();
  for (int i = 0; i < config.sample_iters; ++i) {
    for (int t = 0; t < config.thin; ++t)
      out.store.records.push_back(hmc_iteration(state, config, target, backend, Phase::Sampling));
    out.store.samples.push_back(state.theta);
  }
  out.sampling_seconds = seconds_since(start);
  out.accepts = state.accepts;
  return out;
}

double phase_rate(const std::vector<ChainOutput>& chains, Phase phase) {
  long hits = 0, total = 0;
  for (const auto& c : chains)
    for (const auto& r : c.store.records)
      if (r.phase == phase) {
        ++total;
        hits += r.accepted ? 1 : 0;
      }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::optional<double> labeled_accuracy(const Backend& backend, const Dataset& data,
                                       std::span<const DenseMatrix> samples) {
  if (data.n() == 0) return std::nullopt;
  const auto predicted = predict(backend, data.x, samples);
  const auto truth = argmax_rows(data.y);
  return accuracy(predicted, truth);
}

}  // namespace

void DataSource::validate() const {
  const int set = (dir.empty() ? 0 : 1) + (idx_images.empty() ? 0 : 1) + (csv.empty() ? 0 : 1);
  if (set != 1) throw ConfigError("data", "exactly one of --data, --idx-images or --csv is required");
  if (!idx_images.empty() && idx_labels.empty())
    throw ConfigError("idx-labels", "required with --idx-images");
  if (classes == 1) throw ConfigError("classes", "must be at least 2");
}

LoadedData load_data(const DataSource& source, Precision precision) {
  source.validate();
  LoadedData out;
  if (!source.dir.empty()) {
    DenseMatrix x = load_matrix(source.dir / "x.dmat");
    DenseMatrix y = load_matrix(source.dir / "y.dmat");
    if (source.limit != 0 && x.rows() > source.limit) {
      x = x.row_slice(0, source.limit);
      y = y.row_slice(0, source.limit);
    }
    out.data = Dataset{x.converted(precision), y.converted(precision)};
    out.labels = argmax_rows(out.data.y);
  } else if (!source.idx_images.empty()) {
    RawImageSet images = load_idx_images(source.idx_images);
    std::vector<int> labels = load_idx_labels(source.idx_labels);
    if (labels.size() != images.count)
      throw ContractError("image and label files disagree on the number of rows");
    if (source.limit != 0 && images.count > source.limit) {
      images.pixels.resize(source.limit * images.height * images.width);
      images.count = source.limit;
    }
    labels = truncated(std::move(labels), source.limit);
    const DenseMatrix x = to_design(images, {source.scale, source.intercept}, precision);
    out.data = Dataset{x, one_hot(labels, infer_classes(labels, source.classes), precision)};
    out.labels = std::move(labels);
  } else {
    LabeledTable table = load_csv(source.csv, source.label_column, source.delimiter, precision);
    DenseMatrix x = table.features;
    if (source.limit != 0 && x.rows() > source.limit) x = x.row_slice(0, source.limit);
    auto labels = truncated(std::move(table.labels), source.limit);
    if (source.intercept) x = with_intercept(x);
    out.data = Dataset{x, one_hot(labels, infer_classes(labels, source.classes), precision)};
    out.labels = std::move(labels);
  }
  if (source.standardize) {
    const auto standardizer = ColumnStandardizer::fit(out.data.x, source.intercept);
    out.data.x = standardizer.apply(out.data.x);
  }
  out.data.validate();
  return out;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j{
      {"acceptance", {{"burnin", acceptance_burnin}, {"sampling", acceptance_sampling}}},
      {"accepts", accepts},
      {"iterations", iterations},
      {"divergences", divergences},
      {"log_kernel_trace", log_kernel_trace},
      {"wall_seconds", {{"burnin", burnin_seconds}, {"sampling", sampling_seconds}}},
      {"seed", seed},
      {"config", config},
  };
  j["train_accuracy"] = train_accuracy ? nlohmann::json(*train_accuracy) : nlohmann::json();
  j["test_accuracy"] = test_accuracy ? nlohmann::json(*test_accuracy) : nlohmann::json();
  return j;
}

FitResult run_fit(const FitOptions& options, std::ostream& log) {
  options.hmc.validate();
  if (options.chains < 1) throw ConfigError("chains", "must be at least 1");
  const auto backend = select_backend(options.backend, options.hmc.precision);

  const LoadedData loaded = load_data(options.source, options.hmc.precision);
  const std::size_t n_train = options.n_train == 0 ? loaded.data.n() : options.n_train;
  if (n_train > loaded.data.n())
    throw ConfigError("train", "exceeds the " + std::to_string(loaded.data.n()) + " available rows");
  Dataset train = loaded.data, test;
  if (n_train < loaded.data.n()) std::tie(train, test) = split(loaded.data, n_train);
  auto train_ptr = std::make_shared<const Dataset>(std::move(train));
  const auto target = as_target(*backend, train_ptr);

  DenseMatrix init = options.init ? options.init->converted(options.hmc.precision)
                                  : DenseMatrix(train_ptr->p(), train_ptr->k(),
                                                options.hmc.precision);
  if (init.rows() != train_ptr->p() || init.cols() != train_ptr->k())
    throw ContractError("initial coefficients are " + init.shape_string() + ", expected " +
                        std::to_string(train_ptr->p()) + "x" + std::to_string(train_ptr->k()));

  log << "fit: n=" << train_ptr->n() << " p=" << train_ptr->p() << " k=" << train_ptr->k()
      << " backend=" << backend->id().name << " chains=" << options.chains << "\n";

  std::vector<ChainOutput> chains(static_cast<std::size_t>(options.chains));
  auto run_one = [&](int c) {
    HmcConfig config = options.hmc;
    config.seed = options.hmc.seed + static_cast<std::uint64_t>(c);
    chains[static_cast<std::size_t>(c)] = run_timed_chain(config, *target, *backend, init);
  };
  if (options.chains == 1 || !backend->id().thread_safe) {
    for (int c = 0; c < options.chains; ++c) run_one(c);
  } else {
    std::vector<std::jthread> workers;
    std::vector<std::exception_ptr> errors(chains.size());
    for (int c = 0; c < options.chains; ++c)
      workers.emplace_back([&, c] {
        try {
          run_one(c);
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      });
    workers.clear();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  FitResult result;
  RunReport& report = result.report;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (auto& s : chains[c].store.samples) {
      result.stored.samples.push_back(std::move(s));
      result.stored.chains.push_back(static_cast<int>(c));
    }
    report.accepts += chains[c].accepts;
    report.iterations += static_cast<long>(chains[c].store.records.size());
    report.divergences += chains[c].store.divergences();
    report.burnin_seconds = std::max(report.burnin_seconds, chains[c].burnin_seconds);
    report.sampling_seconds = std::max(report.sampling_seconds, chains[c].sampling_seconds);
  }
  for (const auto& r : chains.front().store.records) report.log_kernel_trace.push_back(r.log_kernel);
  report.acceptance_burnin = phase_rate(chains, Phase::Burnin);
  report.acceptance_sampling = phase_rate(chains, Phase::Sampling);
  report.seed = options.hmc.seed;
  report.config = config_json(options);
  report.train_accuracy = labeled_accuracy(*backend, *train_ptr, result.stored.samples);
  report.test_accuracy = labeled_accuracy(*backend, test, result.stored.samples);
  return result;
}

PredictResult run_predict(const PredictOptions& options) {
  const StoredSamples stored = load_samples(options.samples);
  if (stored.samples.empty()) throw ContractError("sample file holds no samples");
  const Precision precision = stored.samples.front().precision();
  const auto backend = select_backend(options.backend, precision);
  const LoadedData loaded = load_data(options.source, precision);
  const DenseMatrix& b = stored.samples.front();
  if (loaded.data.p() != b.rows())
    throw ContractError("design matrix has " + std::to_string(loaded.data.p()) +
                        " columns but samples have " + std::to_string(b.rows()) + " rows");
  PredictResult result;
  result.classes = predict(*backend, loaded.data.x, stored.samples);
  if (!loaded.labels.empty()) result.accuracy = accuracy(result.classes, loaded.labels);
  return result;
}

ValidateOptions ValidateOptions::defaults() {
  ValidateOptions o;
  o.hmc.epsilon_burnin = 0.1;
  o.hmc.epsilon_sampling = 0.1;
  o.hmc.leapfrog_steps = 20;
  o.hmc.burnin_iters = 0;
  o.hmc.sample_iters = 5000;
  o.hmc.anneal_t0 = 1.0;
  return o;
}

MomentSummary summarize_moments(const SampleStore& store, int batches) {
  MomentSummary m;
  if (store.samples.empty()) return m;
  const std::size_t d = store.samples.front().size();
  const std::size_t s = store.samples.size();
  m.mean.assign(d, 0.0);
  m.variance.assign(d, 0.0);
  m.mean_se.assign(d, 0.0);
  for (const auto& x : store.samples)
    for (std::size_t i = 0; i < d; ++i) m.mean[i] += x.flat(i);
  for (double& v : m.mean) v /= static_cast<double>(s);
  for (const auto& x : store.samples)
    for (std::size_t i = 0; i < d; ++i) {
      const double dev = x.flat(i) - m.mean[i];
      m.variance[i] += dev * dev;
    }
  for (double& v : m.variance) v /= static_cast<double>(s > 1 ? s - 1 : 1);

  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), s);
  const std::size_t len = s / nb;
  if (nb >= 2 && len >= 1) {
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> bm(nb, 0.0);
      for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t t = b * len; t < (b + 1) * len; ++t) bm[b] += store.samples[t].flat(i);
        bm[b] /= static_cast<double>(len);
      }
      double mu = 0.0;
      for (double v : bm) mu += v;
      mu /= static_cast<double>(nb);
      double ss = 0.0;
      for (double v : bm) ss += (v - mu) * (v - mu);
      m.mean_se[i] = std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb));
    }
  }
  m.acceptance = store.acceptance_rate(Phase::Sampling);
  return m;
}

nlohmann::json ValidationReport::to_json() const {
  return {
      {"passed", passed()},
      {"hmc", {{"mean", hmc.mean}, {"variance", hmc.variance}, {"acceptance", hmc.acceptance}}},
      {"rwmh", {{"mean", rwmh.mean}, {"variance", rwmh.variance}, {"acceptance", rwmh.acceptance}}},
      {"checks",
       {{"means", means_ok},
        {"variances", variances_ok},
        {"acceptance", acceptance_ok},
        {"agreement", agreement_ok}}},
      {"max_abs_mean", max_abs_mean},
      {"min_variance", min_variance},
      {"max_variance", max_variance},
      {"max_agreement_z", max_agreement_z},
  };
}

ValidationReport run_validate(const ValidateOptions& options) {
  options.hmc.validate();
  if (options.dim == 0) throw ConfigError("dim", "must be at least 1");
  const auto backend = select_backend(options.backend, options.hmc.precision);
  const GaussianTarget target(*backend, options.dim, options.hmc.precision);
  const DenseMatrix origin(options.dim, 1, options.hmc.precision);

  ValidationReport r;
  r.hmc = summarize_moments(run_chain(options.hmc, target, *backend, origin));
  r.rwmh = summarize_moments(run_rwmh(options.rwmh_iters, options.rwmh_scale, target, *backend,
                                      origin, options.hmc.seed ^ 0x9e3779b97f4a7c15ULL));

  r.min_variance = *std::min_element(r.hmc.variance.begin(), r.hmc.variance.end());
  r.max_variance = *std::max_element(r.hmc.variance.begin(), r.hmc.variance.end());
  for (std::size_t i = 0; i < options.dim; ++i) {
    r.max_abs_mean = std::max(r.max_abs_mean, std::abs(r.hmc.mean[i]));
    const double se = std::hypot(r.hmc.mean_se[i], r.rwmh.mean_se[i]);
    const double z = se > 0.0 ? std::abs(r.hmc.mean[i] - r.rwmh.mean[i]) / se : 0.0;
    r.max_agreement_z = std::max(r.max_agreement_z, z);
  }
  r.means_ok = r.max_abs_mean < options.mean_tolerance;
  r.variances_ok = r.min_variance >= options.variance_low && r.max_variance <= options.variance_high;
  r.acceptance_ok =
      r.hmc.acceptance >= options.acceptance_low && r.hmc.acceptance <= options.acceptance_high;
  r.agreement_ok = r.max_agreement_z <= options.agreement_sigmas;
  return r;
}

int cmd_synth(const SynthOptions& options, std::ostream& out) {
  options.spec.validate();
  const SynthData synth = synth_generate(options.spec, options.precision);
  fs::create_directories(options.out_dir);
  save_matrix(options.out_dir / "x.dmat", synth.data.x);
  save_matrix(options.out_dir / "y.dmat", synth.data.y);
  save_matrix(options.out_dir / "b_true.dmat", synth.true_b);
  out << "wrote n=" << options.spec.n << " p=" << options.spec.p << " k=" << options.spec.k
      << " to " << options.out_dir.string() << "\n";
  return kExitOk;
}

int cmd_fit(const FitOptions& options, std::ostream& out) {
  const FitResult result = run_fit(options, out);
  fs::create_directories(options.out_dir);
  save_samples(options.out_dir / "samples.dsmp", result.stored);
  {
    std::ofstream report(options.out_dir / "report.json");
    if (!report) throw std::runtime_error("cannot write report in " + options.out_dir.string());
    report << std::setw(2) << result.report.to_json() << "\n";
  }
  const RunReport& r = result.report;
  out << std::fixed << std::setprecision(4) << "acceptance burnin=" << r.acceptance_burnin
      << " sampling=" << r.acceptance_sampling << "\n";
  if (r.acceptance_sampling < kAcceptanceLow || r.acceptance_sampling > kAcceptanceHigh)
    out << "warning: sampling acceptance " << r.acceptance_sampling << " is outside ["
        << kAcceptanceLow << ", " << kAcceptanceHigh << "]; consider retuning epsilon\n";
  if (r.divergences > 0) out << "warning: " << r.divergences << " divergent trajectories\n";
  if (r.train_accuracy) out << "train accuracy " << *r.train_accuracy << "\n";
  if (r.test_accuracy) out << "test accuracy " << *r.test_accuracy << "\n";
  out << "samples " << result.stored.samples.size() << " -> "
      << (options.out_dir / "samples.dsmp").string() << "\n";
  return kExitOk;
}

int cmd_predict(const PredictOptions& options, std::ostream& out) {
  const PredictResult result = run_predict(options);
  if (!options.out_classes.empty()) {
    std::ofstream classes(options.out_classes);
    if (!classes) throw std::runtime_error("cannot write " + options.out_classes.string());
    for (int c : result.classes) classes << c << "\n";
  }
  out << "rows " << result.classes.size() << "\n";
  if (result.accuracy) out << "accuracy " << std::fixed << std::setprecision(4) << *result.accuracy << "\n";
  return kExitOk;
}

int cmd_validate(const ValidateOptions& options, std::ostream& out) {
  const ValidationReport report = run_validate(options);
  out << std::setw(2) << report.to_json() << "\n";
  out << (report.passed() ? "validation passed" : "validation FAILED") << "\n";
  return report.passed() ? kExitOk : kExitFailure;
}

int cmd_bench(const BenchOptions& options, std::ostream& out) {
  options.grid.validate();
  if (options.backends.empty()) throw ConfigError("backends", "at least one backend is required");
  if (options.out.empty()) throw ConfigError("out", "an output path is required");
  std::vector<std::shared_ptr<const Backend>> backends;
  for (const auto& name : options.backends)
    backends.push_back(select_backend(name, options.grid.precision));
  const SweepResult result = run_sweep(options.grid, backends, options.out, &out);
  print_summary(result.records, out);
  out << "measured " << result.measured << ", resumed " << result.resumed << ", skipped "
      << result.skipped << " -> " << options.out.string() << "\n";
  return kExitOk;
}

}  // namespace densehmc
