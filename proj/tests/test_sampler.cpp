#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "densehmc/sampler.hpp"
#include "support/oracles.hpp"

using namespace densehmc;

namespace {

const ReferenceBackend kRef;

// Constant log kernel: the free-particle case.
class FlatTarget final : public Target {
 public:
  explicit FlatTarget(std::size_t dim) : dim_(dim) {}
  std::size_t rows() const override { return dim_; }
  std::size_t cols() const override { return 1; }
  Precision precision() const override { return Precision::F64; }
  double log_kernel(const DenseMatrix&) const override { return 0.0; }
  DenseMatrix gradient(const DenseMatrix& theta) const override {
    return DenseMatrix(theta.rows(), theta.cols());
  }

 private:
  std::size_t dim_;
};

// Flat on [-1, 1]; the gradient is NaN outside.
class CliffTarget final : public Target {
 public:
  std::size_t rows() const override { return 1; }
  std::size_t cols() const override { return 1; }
  Precision precision() const override { return Precision::F64; }
  double log_kernel(const DenseMatrix&) const override { return 0.0; }
  DenseMatrix gradient(const DenseMatrix& t) const override {
    return DenseMatrix::from_rows({{std::abs(t(0, 0)) > 1.0 ? std::nan("") : 0.0}});
  }
};

HmcConfig gaussian_config() {
  HmcConfig c;
  c.epsilon_burnin = c.epsilon_sampling = 0.1;
  c.leapfrog_steps = 20;
  c.burnin_iters = 0;
  c.sample_iters = 5000;
  c.anneal_t0 = 1.0;
  return c;
}

std::shared_ptr<const Dataset> small_problem(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return std::make_shared<const Dataset>(oracle::random_dataset(30, 4, 3, rng));
}

TEST(Config, ValidationNamesTheField) {
  HmcConfig c;
  c.sample_iters = 0;
  try {
    c.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "sample_iters");
  }
  c = HmcConfig{};
  c.anneal_r = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = HmcConfig{};
  c.epsilon_sampling = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(HmcConfig{}.validate());
}

TEST(Momentum, MaskedColumnIsZeroAndSeedIsReproducible) {
  const auto mask = make_mask(5, 3);
  Rng a(9), b(9);
  const auto ea = refresh_momentum(5, 3, Precision::F64, &mask, a);
  const auto eb = refresh_momentum(5, 3, Precision::F64, &mask, b);
  EXPECT_EQ(ea, eb);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(ea(j, 2), 0.0);
}

TEST(Momentum, StandardNormalMoments) {
  Rng rng(10);
  const auto eta = refresh_momentum(100000, 1, Precision::F64, nullptr, rng);
  double mean = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) {
    mean += eta.flat(i);
    sq += eta.flat(i) * eta.flat(i);
  }
  mean /= 1e5;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(sq / 1e5 - mean * mean, 1.0, 0.02);
}

TEST(Leapfrog, FreeParticleMovesInAStraightLine) {
  const FlatTarget flat(3);
  const auto theta = DenseMatrix::from_rows({{1}, {2}, {3}});
  const auto eta = DenseMatrix::from_rows({{0.5}, {-1}, {0}});
  const auto t = leapfrog(kRef, flat, theta, eta, 0.1, 7);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(t.theta.flat(i), theta.flat(i) + 0.7 * eta.flat(i), 1e-14);
  EXPECT_EQ(t.eta, eta);
}

TEST(Leapfrog, HarmonicOscillatorEnergyDriftIsSecondOrder) {
  const GaussianTarget g(kRef, 1);
  auto drift = [&](double eps) {
    const int steps = static_cast<int>(std::lround(1.0 / eps));
    const auto t = leapfrog(kRef, g, DenseMatrix::from_rows({{1}}), DenseMatrix(1, 1), eps, steps);
    const double h = 0.5 * t.theta(0, 0) * t.theta(0, 0) + 0.5 * t.eta(0, 0) * t.eta(0, 0);
    return std::abs(h - 0.5);
  };
  const double coarse = drift(0.02), fine = drift(0.01);
  EXPECT_LT(coarse, 0.02 * 0.02);
  EXPECT_NEAR(coarse / fine, 4.0, 0.5);
}

TEST(Leapfrog, DivergenceCarriesStep) {
  const CliffTarget cliff;
  try {
    leapfrog(kRef, cliff, DenseMatrix::from_rows({{0.0}}), DenseMatrix::from_rows({{1.0}}), 0.3, 10);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 4);
  }
}

TEST(Leapfrog, MaskedCoordinatesStayZero) {
  const auto data = small_problem(1);
  const auto target = as_target(kRef, data);
  Rng rng(2);
  const auto eta = refresh_momentum(4, 3, Precision::F64, target->mask(), rng);
  const auto t = leapfrog(kRef, *target, DenseMatrix(4, 3), eta, 0.05, 10);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_EQ(t.theta(j, 2), 0.0);
    EXPECT_EQ(t.eta(j, 2), 0.0);
  }
}

// Reversibility: forward, negate momentum, forward again returns the start.
TEST(Leapfrog, IsReversibleOnEveryTestTarget) {
  std::mt19937_64 rng(3);
  const auto data = small_problem(3);
  const auto multinomial = as_target(kRef, data);
  const GaussianTarget gaussian(kRef, 10);
  const FlatTarget flat(4);
  for (const Target* target : {static_cast<const Target*>(multinomial.get()),
                               static_cast<const Target*>(&gaussian),
                               static_cast<const Target*>(&flat)}) {
    for (int trial = 0; trial < 10; ++trial) {
      Rng r(static_cast<std::uint64_t>(trial));
      DenseMatrix theta = oracle::random_matrix(target->rows(), target->cols(), rng, 0.3);
      if (const auto* m = target->mask()) theta = kRef.elem_binary(theta, *m, BinaryOp::Mul);
      const auto eta = refresh_momentum(target->rows(), target->cols(), Precision::F64,
                                        target->mask(), r);
      const auto fwd = leapfrog(kRef, *target, theta, eta, 0.05, 25);
      const auto back = leapfrog(kRef, *target, fwd.theta, kRef.axpy(-2.0, fwd.eta, fwd.eta),
                                 0.05, 25);
      EXPECT_LT(max_abs_diff(back.theta, theta), 1e-8);
      EXPECT_LT(max_abs_diff(kRef.axpy(-2.0, back.eta, back.eta), eta), 1e-8);
    }
  }
}

TEST(Acceptance, Examples) {
  const auto eta = DenseMatrix::from_rows({{0.3}, {-1.2}});
  EXPECT_EQ(accept_prob(kRef, -4.0, -4.0, eta, eta), 1.0);
  // ‖η_new‖² = ‖η_old‖² + 2 ln 2 halves the density.
  EXPECT_NEAR(accept_prob(-1.0, -1.0, 0.5 * (1.0 + 2.0 * std::log(2.0)), 0.5), 0.5, 1e-15);
  EXPECT_EQ(accept_prob(2.0, 1.0, 0.1, 0.5), 1.0);
  EXPECT_EQ(accept_prob(std::nan(""), 1.0, 0.1, 0.5), 0.0);
  EXPECT_EQ(accept_prob(-std::numeric_limits<double>::infinity(), 1.0, 0.1, 0.5), 0.0);
}

TEST(Acceptance, MatchesDirectFormulaAndStaysInUnitInterval) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const auto en = oracle::random_matrix(3, 2, rng), eo = oracle::random_matrix(3, 2, rng);
    const double ln = z(rng), lo = z(rng);
    double kn = 0.0, ko = 0.0;
    for (std::size_t t = 0; t < 6; ++t) {
      kn += 0.5 * en.flat(t) * en.flat(t);
      ko += 0.5 * eo.flat(t) * eo.flat(t);
    }
    const double want = std::min(1.0, std::exp((ln - kn) - (lo - ko)));
    const double got = accept_prob(kRef, ln, lo, en, eo);
    EXPECT_NEAR(got, want, 1e-12);
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Acceptance, UnscaledKineticDoublesTheQuadratic) {
  const auto eta = DenseMatrix::from_rows({{1, 2}, {3, 0}});
  EXPECT_EQ(kinetic_energy(kRef, eta), 7.0);
  EXPECT_EQ(kinetic_energy(kRef, eta, KineticForm::Unscaled), 14.0);
}

TEST(Annealing, Schedule) {
  EXPECT_EQ(anneal_temp(1.0, 0.9), 1.0);
  EXPECT_EQ(anneal_temp(1e3, 0.9), 900.0);
  const int steps = anneal_steps_to_unity(1e3, 0.9);
  EXPECT_EQ(steps, 66);
  double t = 1e3;
  for (int i = 0; i < steps - 1; ++i) {
    const double next = anneal_temp(t, 0.9);
    EXPECT_LE(next, t);
    t = next;
  }
  EXPECT_GT(t, 1.0);
  EXPECT_EQ(anneal_temp(t, 0.9), 1.0);
}

TEST(Annealing, ChainFollowsScheduleThenHoldsUnity) {
  const auto data = small_problem(5);
  const auto target = as_target(kRef, data);
  HmcConfig c;
  c.leapfrog_steps = 2;
  c.burnin_iters = 80;
  c.sample_iters = 10;
  const auto store = run_chain(c, *target, kRef, DenseMatrix(4, 3));
  double t = c.anneal_t0;
  for (int i = 0; i < c.burnin_iters; ++i) {
    t = std::max(1.0, 0.9 * t);
    EXPECT_EQ(store.records[static_cast<std::size_t>(i)].temperature, t);
  }
  for (std::size_t i = 80; i < store.records.size(); ++i) {
    EXPECT_EQ(store.records[i].temperature, 1.0);
    EXPECT_EQ(store.records[i].phase, Phase::Sampling);
  }
}

TEST(Iteration, FlatTargetAlwaysAccepts) {
  const FlatTarget flat(5);
  HmcConfig c = gaussian_config();
  c.sample_iters = 50;
  const auto store = run_chain(c, flat, kRef, DenseMatrix(5, 1));
  EXPECT_EQ(store.acceptance_rate(Phase::Sampling), 1.0);
}

TEST(Iteration, HugeTemperatureAcceptsEverything) {
  const GaussianTarget g(kRef, 4);
  HmcConfig c = gaussian_config();
  c.epsilon_burnin = 1.9;  // near the stability limit: untempered acceptance is poor
  c.leapfrog_steps = 3;
  auto state = init_chain(kRef, g, DenseMatrix(4, 1), 6, 1e300);
  c.anneal_r = 0.999;
  int accepted = 0;
  for (int i = 0; i < 200; ++i) accepted += hmc_iteration(state, c, g, kRef, Phase::Burnin).accepted;
  EXPECT_EQ(accepted, 200);
}

TEST(Iteration, DivergenceIsARejection) {
  const CliffTarget cliff;
  HmcConfig c = gaussian_config();
  c.epsilon_sampling = 0.1;
  c.leapfrog_steps = 15;
  c.sample_iters = 100;
  const auto store = run_chain(c, cliff, kRef, DenseMatrix(1, 1));
  EXPECT_GT(store.divergences(), 0u);
  for (const auto& r : store.records)
    if (r.diverged) {
      EXPECT_FALSE(r.accepted);
      EXPECT_TRUE(std::isnan(r.energy_error));
    }
  for (const auto& s : store.samples) EXPECT_LE(std::abs(s(0, 0)), 1.0);
}

TEST(Chain, StoresRequestedSamplesAndIsSeedDeterministic) {
  const auto data = small_problem(7);
  const auto target = as_target(kRef, data);
  HmcConfig c;
  c.epsilon_burnin = c.epsilon_sampling = 0.02;
  c.leapfrog_steps = 5;
  c.burnin_iters = 10;
  c.sample_iters = 25;
  const auto a = run_chain(c, *target, kRef, DenseMatrix(4, 3));
  const auto b = run_chain(c, *target, kRef, DenseMatrix(4, 3));
  ASSERT_EQ(a.samples.size(), 25u);
  EXPECT_EQ(a.records.size(), 35u);
  for (std::size_t i = 0; i < a.samples.size(); ++i) EXPECT_EQ(a.samples[i], b.samples[i]);
  for (const auto& s : a.samples)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(s(j, 2), 0.0);
  c.seed = 2;
  const auto d = run_chain(c, *target, kRef, DenseMatrix(4, 3));
  EXPECT_FALSE(d.samples.back() == a.samples.back());
}

TEST(Chain, ThinningKeepsEveryThinthState) {
  const GaussianTarget g(kRef, 2);
  HmcConfig c = gaussian_config();
  c.sample_iters = 10;
  c.thin = 3;
  const auto store = run_chain(c, g, kRef, DenseMatrix(2, 1));
  EXPECT_EQ(store.samples.size(), 10u);
  EXPECT_EQ(store.records.size(), 30u);
}

TEST(Chain, RejectsInfeasibleStart) {
  const auto data = small_problem(8);
  const auto target = as_target(kRef, data);
  auto bad = DenseMatrix(4, 3);
  bad.set(0, 2, 1.0);
  EXPECT_THROW(run_chain(HmcConfig{}, *target, kRef, bad), ContractError);
  EXPECT_THROW(run_chain(HmcConfig{}, *target, kRef, DenseMatrix(3, 3)), ContractError);
}

TEST(Rwmh, ZeroScaleNeverMoves) {
  const GaussianTarget g(kRef, 3);
  const auto start = DenseMatrix::from_rows({{0.5}, {-0.2}, {1.0}});
  const auto store = run_rwmh(100, 0.0, g, kRef, start, 1);
  EXPECT_EQ(store.acceptance_rate(Phase::Sampling), 1.0);
  EXPECT_EQ(store.samples.back(), start);
}

TEST(Rwmh, HalfDensityIsAcceptedHalfTheTime) {
  EXPECT_NEAR(accept_prob(-1.0 - std::log(2.0), -1.0, 0.0, 0.0), 0.5, 1e-15);
}

TEST(Rwmh, TwoDimensionalGaussianMoments) {
  const GaussianTarget g(kRef, 2);
  const auto store = run_rwmh(200000, 1.6, g, kRef, DenseMatrix(2, 1), 3);
  double m[2] = {0, 0}, v[2] = {0, 0};
  for (const auto& s : store.samples)
    for (std::size_t i = 0; i < 2; ++i) m[i] += s.flat(i) / 2e5;
  for (const auto& s : store.samples)
    for (std::size_t i = 0; i < 2; ++i) v[i] += (s.flat(i) - m[i]) * (s.flat(i) - m[i]) / 2e5;
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(m[i], 0.0, 0.03);
    EXPECT_NEAR(v[i], 1.0, 0.05);
  }
}

TEST(Statistics, HmcMomentsOnStandardGaussian) {
  const GaussianTarget g(kRef, 10);
  const auto store = run_chain(gaussian_config(), g, kRef, DenseMatrix(10, 1));
  for (std::size_t i = 0; i < 10; ++i) {
    double m = 0.0, v = 0.0;
    for (const auto& s : store.samples) m += s.flat(i) / 5000.0;
    for (const auto& s : store.samples) v += (s.flat(i) - m) * (s.flat(i) - m) / 4999.0;
    EXPECT_LT(std::abs(m), 0.05);
    EXPECT_GE(v, 0.9);
    EXPECT_LE(v, 1.1);
  }
  EXPECT_GE(store.acceptance_rate(Phase::Sampling), 0.6);
}

TEST(Statistics, UnscaledKineticBreaksTheTarget) {
  const GaussianTarget g(kRef, 10);
  HmcConfig c = gaussian_config();
  c.kinetic = KineticForm::Unscaled;
  const auto store = run_chain(c, g, kRef, DenseMatrix(10, 1));
  bool any_outside = false;
  for (std::size_t i = 0; i < 10; ++i) {
    double m = 0.0, v = 0.0;
    for (const auto& s : store.samples) m += s.flat(i) / 5000.0;
    for (const auto& s : store.samples) v += (s.flat(i) - m) * (s.flat(i) - m) / 4999.0;
    any_outside = any_outside || v < 0.9 || v > 1.1;
  }
  EXPECT_TRUE(any_outside);
}

}  // namespace
