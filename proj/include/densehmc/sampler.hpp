#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "densehmc/backend.hpp"
#include "densehmc/model.hpp"

namespace densehmc {

/// A leapfrog trajectory produced a non-finite gradient or position.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int step)
      : std::runtime_error("trajectory diverged at leapfrog step " + std::to_string(step)),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

/// Kinetic energy used in the acceptance test. `Unscaled` (η·η with no ½)
/// exists only as a negative control: it does not preserve the target.
enum class KineticForm { Half, Unscaled };

enum class Phase { Burnin, Sampling };

struct HmcConfig {
  double epsilon_burnin = 1e-4;
  double epsilon_sampling = 7e-5;
  int leapfrog_steps = 100;
  int burnin_iters = 100;
  int sample_iters = 100;
  double anneal_t0 = 1e3;
  double anneal_r = 0.9;
  int thin = 1;
  std::uint64_t seed = 1;
  Precision precision = Precision::F64;
  KineticForm kinetic = KineticForm::Half;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

using Rng = std::mt19937_64;

struct ChainState {
  DenseMatrix theta;
  long iter = 0;
  double temperature = 1.0;
  long accepts = 0;
  double log_kernel_current = 0.0;
  Rng rng;
};

struct IterationRecord {
  Phase phase = Phase::Sampling;
  double temperature = 1.0;
  double log_kernel = 0.0;
  double accept_prob = 0.0;
  bool accepted = false;
  /// H(proposal) - H(current); NaN when the trajectory diverged.
  double energy_error = 0.0;
  bool diverged = false;
};

struct SampleStore {
  std::vector<DenseMatrix> samples;
  std::vector<IterationRecord> records;

  double acceptance_rate(Phase phase) const;
  std::size_t divergences() const;
};

/// Fresh momentum with i.i.d. N(0, 1) entries; masked coordinates are zero.
DenseMatrix refresh_momentum(std::size_t rows, std::size_t cols, Precision precision,
                             const DenseMatrix* mask, Rng& rng);

struct Trajectory {
  DenseMatrix theta;
  DenseMatrix eta;
};

/// L leapfrog steps of size epsilon with adjacent momentum half-steps fused.
/// Throws DivergenceError carrying the 1-based step index on a non-finite
/// gradient.
Trajectory leapfrog(const Backend& backend, const Target& target, const DenseMatrix& theta,
                    const DenseMatrix& eta, double epsilon, int steps);

double kinetic_energy(const Backend& backend, const DenseMatrix& eta,
                      KineticForm form = KineticForm::Half);

/// min(1, exp((logK_new - K_new) - (logK_old - K_old))); 0 for non-finite
/// logK_new.
double accept_prob(double log_kernel_new, double log_kernel_old, double kinetic_new,
                   double kinetic_old);
double accept_prob(const Backend& backend, double log_kernel_new, double log_kernel_old,
                   const DenseMatrix& eta_new, const DenseMatrix& eta_old,
                   KineticForm form = KineticForm::Half);

/// max(1, r·T)
double anneal_temp(double previous, double r);

/// Iterations needed for the annealing schedule to reach exactly 1.
int anneal_steps_to_unity(double t0, double r);

ChainState init_chain(const Backend& backend, const Target& target, DenseMatrix theta,
                      std::uint64_t seed, double temperature = 1.0);

/// One HMC transition. During burn-in the temperature is annealed first and
/// the proposal is accepted with probability α^(1/T); during sampling T = 1.
IterationRecord hmc_iteration(ChainState& state, const HmcConfig& config, const Target& target,
                              const Backend& backend, Phase phase);

SampleStore run_chain(const HmcConfig& config, const Target& target, const Backend& backend,
                      const DenseMatrix& init);

/// Random-walk Metropolis with a symmetric Gaussian proposal.
IterationRecord rwmh_iteration(ChainState& state, double proposal_scale, const Target& target,
                               const Backend& backend);

SampleStore run_rwmh(int iterations, double proposal_scale, const Target& target,
                     const Backend& backend, const DenseMatrix& init, std::uint64_t seed);

}  // namespace densehmc
