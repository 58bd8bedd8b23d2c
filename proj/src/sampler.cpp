#include "densehmc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace densehmc {

namespace {

// Uniform on [0, 1) from the top 53 bits.
double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

DenseMatrix apply_mask(const Backend& backend, const DenseMatrix& m, const DenseMatrix* mask) {
  return mask == nullptr ? m : backend.elem_binary(m, *mask, BinaryOp::Mul);
}

// Accept with probability alpha^(1/temperature). The uniform draw is always
// consumed so the stream does not depend on the outcome.
bool accept_draw(Rng& rng, double alpha, double temperature) {
  const double u = uniform01(rng);
  if (!(alpha > 0.0)) return false;
  if (alpha >= 1.0) return true;
  return std::log(u) < std::log(alpha) / temperature;
}

void check_position(const Target& target, const DenseMatrix& theta) {
  if (theta.rows() != target.rows() || theta.cols() != target.cols())
    throw ContractError("initial position has shape " + theta.shape_string() +
                        ", target expects " + std::to_string(target.rows()) + "x" +
                        std::to_string(target.cols()));
  if (theta.precision() != target.precision())
    throw ContractError("initial position precision does not match the target");
  if (const DenseMatrix* mask = target.mask()) {
    for (std::size_t i = 0; i < theta.size(); ++i)
      if (mask->flat(i) == 0.0 && theta.flat(i) != 0.0)
        throw ContractError("initial position violates the constraint mask at flat index " +
                            std::to_string(i));
  }
}

}  // namespace

void HmcConfig::validate() const {
  if (!(epsilon_burnin > 0.0) || !std::isfinite(epsilon_burnin))
    throw ConfigError("epsilon_burnin", "must be a positive finite step size");
  if (!(epsilon_sampling > 0.0) || !std::isfinite(epsilon_sampling))
    throw ConfigError("epsilon_sampling", "must be a positive finite step size");
  if (leapfrog_steps < 1) throw ConfigError("leapfrog_steps", "must be at least 1");
  if (burnin_iters < 0) throw ConfigError("burnin_iters", "must be nonnegative");
  if (sample_iters < 1) throw ConfigError("sample_iters", "must be at least 1");
  if (!(anneal_t0 >= 1.0) || !std::isfinite(anneal_t0))
    throw ConfigError("anneal_t0", "must be a finite temperature >= 1");
  if (!(anneal_r > 0.0 && anneal_r < 1.0))
    throw ConfigError("anneal_r", "must lie strictly between 0 and 1");
  if (thin < 1) throw ConfigError("thin", "must be at least 1");
}

double SampleStore::acceptance_rate(Phase phase) const {
  long total = 0, accepted = 0;
  for (const auto& r : records) {
    if (r.phase != phase) continue;
    ++total;
    accepted += r.accepted;
  }
  return total == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(total);
}

std::size_t SampleStore::divergences() const {
  return static_cast<std::size_t>(
      std::count_if(records.begin(), records.end(), [](const auto& r) { return r.diverged; }));
}

DenseMatrix refresh_momentum(std::size_t rows, std::size_t cols, Precision precision,
                             const DenseMatrix* mask, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  DenseMatrix eta(rows, cols, precision);
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double draw = z(rng);
    if (mask == nullptr || mask->flat(i) != 0.0) eta.set_flat(i, draw);
  }
  return eta;
}

Trajectory leapfrog(const Backend& backend, const Target& target, const DenseMatrix& theta,
                    const DenseMatrix& eta, double epsilon, int steps) {
  if (!(epsilon > 0.0)) throw ContractError("leapfrog: epsilon must be positive");
  if (steps < 1) throw ContractError("leapfrog: need at least one step");
  const DenseMatrix* mask = target.mask();

  auto gradient_at = [&](const DenseMatrix& position, int step) {
    DenseMatrix g = target.gradient(position);
    if (!g.all_finite()) throw DivergenceError(step);
    return g;
  };

  Trajectory t{theta, eta};
  t.eta = apply_mask(backend, backend.axpy(0.5 * epsilon, gradient_at(t.theta, 0), t.eta), mask);
  for (int step = 1; step <= steps; ++step) {
    t.theta = apply_mask(backend, backend.axpy(epsilon, t.eta, t.theta), mask);
    const double kick = step == steps ? 0.5 * epsilon : epsilon;
    t.eta = apply_mask(backend, backend.axpy(kick, gradient_at(t.theta, step), t.eta), mask);
  }
  return t;
}

double kinetic_energy(const Backend& backend, const DenseMatrix& eta, KineticForm form) {
  DenseMatrix flat = eta;
  if (eta.cols() != 1 && eta.rows() != 1)
    flat = DenseMatrix::from_values(eta.size(), 1, eta.to_vector(), eta.precision());
  const double squared = backend.dot_self(flat);
  return form == KineticForm::Half ? 0.5 * squared : squared;
}

double accept_prob(double log_kernel_new, double log_kernel_old, double kinetic_new,
                   double kinetic_old) {
  if (!std::isfinite(log_kernel_new) || !std::isfinite(kinetic_new)) return 0.0;
  const double log_ratio = (log_kernel_new - kinetic_new) - (log_kernel_old - kinetic_old);
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

double accept_prob(const Backend& backend, double log_kernel_new, double log_kernel_old,
                   const DenseMatrix& eta_new, const DenseMatrix& eta_old, KineticForm form) {
  return accept_prob(log_kernel_new, log_kernel_old, kinetic_energy(backend, eta_new, form),
                     kinetic_energy(backend, eta_old, form));
}

double anneal_temp(double previous, double r) { return std::max(1.0, r * previous); }

int anneal_steps_to_unity(double t0, double r) {
  if (t0 <= 1.0) return 0;
  return static_cast<int>(std::ceil(std::log(t0) / -std::log(r)));
}

ChainState init_chain(const Backend& /*backend*/, const Target& target, DenseMatrix theta,
                      std::uint64_t seed, double temperature) {
  check_position(target, theta);
  ChainState state;
  state.log_kernel_current = target.log_kernel(theta);
  if (!std::isfinite(state.log_kernel_current))
    throw ContractError("initial position has a non-finite log kernel");
  state.theta = std::move(theta);
  state.temperature = temperature;
  state.rng.seed(seed);
  return state;
}

IterationRecord hmc_iteration(ChainState& state, const HmcConfig& config, const Target& target,
                              const Backend& backend, Phase phase) {
  IterationRecord rec;
  rec.phase = phase;
  state.temperature =
      phase == Phase::Burnin ? anneal_temp(state.temperature, config.anneal_r) : 1.0;
  rec.temperature = state.temperature;
  const double epsilon =
      phase == Phase::Burnin ? config.epsilon_burnin : config.epsilon_sampling;

  const DenseMatrix eta0 = refresh_momentum(target.rows(), target.cols(), target.precision(),
                                            target.mask(), state.rng);
  const double kinetic_old = kinetic_energy(backend, eta0, config.kinetic);
  double alpha = 0.0;
  double log_kernel_new = std::numeric_limits<double>::quiet_NaN();
  DenseMatrix proposal;
  try {
    Trajectory t = leapfrog(backend, target, state.theta, eta0, epsilon, config.leapfrog_steps);
    log_kernel_new = target.log_kernel(t.theta);
    const double kinetic_new = kinetic_energy(backend, t.eta, config.kinetic);
    alpha = accept_prob(log_kernel_new, state.log_kernel_current, kinetic_new, kinetic_old);
    rec.energy_error =
        (kinetic_new - log_kernel_new) - (kinetic_old - state.log_kernel_current);
    rec.diverged = !std::isfinite(log_kernel_new);
    proposal = std::move(t.theta);
  } catch (const DivergenceError&) {
    rec.diverged = true;
  }
  if (rec.diverged) rec.energy_error = std::numeric_limits<double>::quiet_NaN();

  rec.accept_prob = alpha;
  rec.accepted = accept_draw(state.rng, alpha, state.temperature);
  if (rec.accepted) {
    state.theta = std::move(proposal);
    state.log_kernel_current = log_kernel_new;
    ++state.accepts;
  }
  rec.log_kernel = state.log_kernel_current;
  ++state.iter;
  return rec;
}

SampleStore run_chain(const HmcConfig& config, const Target& target, const Backend& backend,
                      const DenseMatrix& init) {
  config.validate();
  ChainState state = init_chain(backend, target, init, config.seed, config.anneal_t0);
  SampleStore store;
  store.records.reserve(static_cast<std::size_t>(config.burnin_iters) +
                        static_cast<std::size_t>(config.sample_iters) * config.thin);
  store.samples.reserve(static_cast<std::size_t>(config.sample_iters));
  for (int i = 0; i < config.burnin_iters; ++i)
    store.records.push_back(hmc_iteration(state, config, target, backend, Phase::Burnin));
  for (int i = 0; i < config.sample_iters; ++i) {
    for (int t = 0; t < config.thin; ++t)
      store.records.push_back(hmc_iteration(state, config, target, backend, Phase::Sampling));
    store.samples.push_back(state.theta);
  }
  return store;
}

IterationRecord rwmh_iteration(ChainState& state, double proposal_scale, const Target& target,
                               const Backend& backend) {
  if (!(proposal_scale >= 0.0)) throw ContractError("rwmh: proposal scale must be >= 0");
  IterationRecord rec;
  rec.phase = Phase::Sampling;
  const DenseMatrix noise = refresh_momentum(target.rows(), target.cols(), target.precision(),
                                             target.mask(), state.rng);
  DenseMatrix proposal =
      apply_mask(backend, backend.axpy(proposal_scale, noise, state.theta), target.mask());
  const double log_kernel_new = target.log_kernel(proposal);
  rec.accept_prob = accept_prob(log_kernel_new, state.log_kernel_current, 0.0, 0.0);
  rec.accepted = accept_draw(state.rng, rec.accept_prob, 1.0);
  rec.diverged = !std::isfinite(log_kernel_new);
  rec.energy_error = state.log_kernel_current - log_kernel_new;
  if (rec.accepted) {
    state.theta = std::move(proposal);
    state.log_kernel_current = log_kernel_new;
    ++state.accepts;
  }
  rec.log_kernel = state.log_kernel_current;
  ++state.iter;
  return rec;
}

SampleStore run_rwmh(int iterations, double proposal_scale, const Target& target,
                     const Backend& backend, const DenseMatrix& init, std::uint64_t seed) {
  if (iterations < 1) throw ConfigError("iterations", "must be at least 1");
  ChainState state = init_chain(backend, target, init, seed);
  SampleStore store;
  store.records.reserve(static_cast<std::size_t>(iterations));
  store.samples.reserve(static_cast<std::size_t>(iterations));
  for (int i = 0; i < iterations; ++i) {
    store.records.push_back(rwmh_iteration(state, proposal_scale, target, backend));
    store.samples.push_back(state.theta);
  }
  return store;
}

}  // namespace densehmc
