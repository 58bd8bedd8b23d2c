#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "densehmc/commands.hpp"
#include "densehmc/conformance.hpp"

using namespace densehmc;

namespace {

CLI::Option* add_precision(CLI::App& cmd, Precision& target) {
  return cmd
      .add_option_function<std::string>(
          "--precision", [&target](const std::string& s) { target = parse_precision(s); },
          "f32 or f64")
      ->check(CLI::IsMember({"f32", "f64"}));
}

void add_data_flags(CLI::App& cmd, DataSource& src) {
  cmd.add_option("--data", src.dir, "Directory holding x.dmat and y.dmat");
  cmd.add_option("--idx-images", src.idx_images, "IDX image file");
  cmd.add_option("--idx-labels", src.idx_labels, "IDX label file");
  cmd.add_option("--csv", src.csv, "Delimited text with a header row");
  cmd.add_option("--label-column", src.label_column, "Class column in --csv input");
  cmd.add_option("--delimiter", src.delimiter, "Field separator for --csv input");
  cmd.add_option("--limit", src.limit, "Keep only the first N rows (0 keeps all)");
  cmd.add_option("--classes", src.classes, "Number of classes (0 infers from labels)");
  cmd.add_flag("--intercept,!--no-intercept", src.intercept, "Prepend a column of ones");
  cmd.add_flag("--scale,!--no-scale", src.scale, "Divide IDX pixels by 255");
  cmd.add_flag("--standardize", src.standardize, "Center and scale every feature column");
}

void add_hmc_flags(CLI::App& cmd, HmcConfig& c) {
  cmd.add_option("--epsilon-burnin", c.epsilon_burnin, "Leapfrog step size during burn-in");
  cmd.add_option("--epsilon", c.epsilon_sampling, "Leapfrog step size during sampling");
  cmd.add_option("--leapfrog-steps,-L", c.leapfrog_steps, "Leapfrog steps per trajectory");
  cmd.add_option("--burnin", c.burnin_iters, "Burn-in iterations");
  cmd.add_option("--samples", c.sample_iters, "Retained samples");
  cmd.add_option("--t0", c.anneal_t0, "Initial annealing temperature");
  cmd.add_option("--anneal-rate", c.anneal_r, "Per-iteration temperature factor");
  cmd.add_option("--thin", c.thin, "Transitions per retained sample");
  cmd.add_option("--seed", c.seed, "Random seed");
  add_precision(cmd, c.precision);
}

std::vector<Variant> parse_variants(const std::string& s) {
  if (s == "masked") return {Variant::Masked};
  if (s == "unmasked") return {Variant::Unmasked};
  if (s == "both") return {Variant::Masked, Variant::Unmasked};
  throw ConfigError("variant", "expected masked, unmasked or both");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian Monte Carlo for Bayesian multinomial regression"};
  app.set_config("--config", "", "TOML or INI file with flag values; flags take precedence");
  app.require_subcommand(1);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth_cmd->add_option("--n", synth.spec.n, "Rows");
  synth_cmd->add_option("--p", synth.spec.p, "Columns of X");
  synth_cmd->add_option("--k", synth.spec.k, "Classes");
  synth_cmd->add_option("--coef-variance", synth.spec.coef_variance, "Variance of X and B entries");
  synth_cmd->add_option("--seed", synth.spec.seed, "Random seed");
  add_precision(*synth_cmd, synth.precision);
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();

  FitOptions fit;
  std::string init_path;
  auto* fit_cmd = app.add_subcommand("fit", "Sample the posterior and report diagnostics");
  add_data_flags(*fit_cmd, fit.source);
  add_hmc_flags(*fit_cmd, fit.hmc);
  fit_cmd->add_option("--train", fit.n_train, "Rows used for fitting; the rest are held out");
  fit_cmd->add_option("--backend", fit.backend, "Compute backend");
  fit_cmd->add_option("--chains", fit.chains, "Independent chains (seeds seed, seed+1, ...)");
  fit_cmd->add_option("--init", init_path, "Starting coefficient matrix file");
  fit_cmd->add_option("--out", fit.out_dir, "Output directory")->required();

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "Classify rows with stored posterior samples");
  add_data_flags(*pred_cmd, pred.source);
  pred_cmd->add_option("--samples", pred.samples, "Sample file written by fit")->required();
  pred_cmd->add_option("--backend", pred.backend, "Compute backend");
  pred_cmd->add_option("--out", pred.out_classes, "Write one predicted class per line");

  ValidateOptions val = ValidateOptions::defaults();
  std::string kinetic = "half";
  auto* val_cmd = app.add_subcommand("validate", "Check the sampler on a standard Gaussian");
  val_cmd->add_option("--dim", val.dim, "Dimension");
  val_cmd->add_option("--iters", val.hmc.sample_iters, "HMC iterations");
  val_cmd->add_option("--epsilon", val.hmc.epsilon_sampling, "Leapfrog step size");
  val_cmd->add_option("-L,--leapfrog-steps", val.hmc.leapfrog_steps, "Leapfrog steps");
  val_cmd->add_option("--rwmh-iters", val.rwmh_iters, "Random-walk Metropolis iterations");
  val_cmd->add_option("--rwmh-scale", val.rwmh_scale, "Random-walk proposal scale");
  val_cmd->add_option("--seed", val.hmc.seed, "Random seed");
  val_cmd->add_option("--backend", val.backend, "Compute backend");
  val_cmd->add_option("--kinetic", kinetic)->check(CLI::IsMember({"half", "unscaled"}))->group("");

  BenchOptions bench;
  std::string variant = "masked";
  auto* bench_cmd = app.add_subcommand("bench", "Time gradient and leapfrog kernels over a grid");
  bench_cmd->add_option("--n", bench.grid.ns, "Row counts")->delimiter(',');
  bench_cmd->add_option("--k", bench.grid.ks, "Class counts")->delimiter(',');
  bench_cmd->add_option("--p", bench.grid.ps, "Column counts")->delimiter(',');
  bench_cmd->add_option("--reps", bench.grid.repetitions, "Timed repetitions per point");
  bench_cmd->add_option("--variant", variant, "masked, unmasked or both");
  add_precision(*bench_cmd, bench.grid.precision);
  bench_cmd->add_option("--memory-budget", bench.grid.memory_budget_bytes,
                        "Skip grid points whose working set exceeds this many bytes");
  bench_cmd->add_option("--seed", bench.grid.seed, "Random seed");
  bench_cmd->add_option("--backends", bench.backends, "Backends to time")
      ->delimiter(',');
  bench_cmd->add_option("--out", bench.out, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, std::cout);
    if (*fit_cmd) {
      if (!init_path.empty()) fit.init = load_matrix(init_path);
      return cmd_fit(fit, std::cout);
    }
    if (*pred_cmd) return cmd_predict(pred, std::cout);
    if (*val_cmd) {
      val.hmc.epsilon_burnin = val.hmc.epsilon_sampling;
      val.hmc.kinetic = kinetic == "unscaled" ? KineticForm::Unscaled : KineticForm::Half;
      return cmd_validate(val, std::cout);
    }
    if (*bench_cmd) {
      bench.grid.variants = parse_variants(variant);
      return cmd_bench(bench, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UnknownBackendError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
