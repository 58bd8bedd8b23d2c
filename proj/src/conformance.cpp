#include "densehmc/conformance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <utility>

namespace densehmc {

namespace {

struct Checker {
  const Backend& candidate;
  ReferenceBackend reference;
  double tol;
  ConformanceReport& report;

  void matrices(std::string_view op, int index, const DenseMatrix& got,
                const DenseMatrix& want) {
    ++report.checks;
    std::ostringstream detail;
    if (got.rows() != want.rows() || got.cols() != want.cols() ||
        got.precision() != want.precision()) {
      detail << "shape " << got.shape_string() << ", expected " << want.shape_string();
    } else if (!got.all_finite() && want.all_finite()) {
      detail << "non-finite output";
    } else {
      double scale = 0.0;
      for (std::size_t i = 0; i < want.size(); ++i)
        scale = std::max(scale, std::abs(want.flat(i)));
      const double err = max_abs_diff(got, want);
      if (err <= tol * std::max(scale, 1e-300)) return;
      detail << "max abs error " << err << " exceeds " << tol << " x " << scale;
    }
    report.failures.push_back({std::string(op), index, detail.str()});
  }

  void scalars(std::string_view op, int index, double got, double want) {
    ++report.checks;
    if (std::abs(got - want) <= tol * std::max(std::abs(want), 1e-300)) return;
    std::ostringstream detail;
    detail << "got " << got << ", expected " << want;
    report.failures.push_back({std::string(op), index, detail.str()});
  }
};

class CaseGenerator {
 public:
  CaseGenerator(std::uint64_t seed, Precision precision) : rng_(seed), precision_(precision) {}

  std::size_t dim() { return std::uniform_int_distribution<std::size_t>(1, 16)(rng_); }

  DenseMatrix normal(std::size_t r, std::size_t c, double scale = 1.0) {
    std::normal_distribution<double> z(0.0, scale);
    DenseMatrix m(r, c, precision_);
    for (std::size_t i = 0; i < m.size(); ++i) m.set_flat(i, z(rng_));
    return m;
  }

  DenseMatrix positive(std::size_t r, std::size_t c) {
    std::uniform_real_distribution<double> u(0.01, 10.0);
    DenseMatrix m(r, c, precision_);
    for (std::size_t i = 0; i < m.size(); ++i) m.set_flat(i, u(rng_));
    return m;
  }

  double logit_scale() {
    static constexpr double kScales[] = {1.0, 10.0, 1000.0};
    return kScales[std::uniform_int_distribution<int>(0, 2)(rng_)];
  }

  double scalar() { return std::normal_distribution<double>(0.0, 2.0)(rng_); }

 private:
  std::mt19937_64 rng_;
  Precision precision_;
};

void run_cases(Checker& check, Precision precision, int cases, std::uint64_t seed) {
  CaseGenerator gen(seed, precision);
  const Backend& ref = check.reference;
  const Backend& cand = check.candidate;
  for (int i = 0; i < cases; ++i) {
    const std::size_t m = gen.dim(), k = gen.dim(), n = gen.dim();

    const auto a = gen.normal(m, k), b = gen.normal(k, n);
    check.matrices("matmul", i, cand.matmul(a, b), ref.matmul(a, b));

    const auto at = gen.normal(k, m), bt = gen.normal(k, n);
    check.matrices("matmul_transpose_left", i, cand.matmul_transpose_left(at, bt),
                   ref.matmul_transpose_left(at, bt));

    const auto logits = gen.normal(m, n, gen.logit_scale());
    check.matrices("row_softmax", i, cand.row_softmax(logits), ref.row_softmax(logits));
    check.matrices("row_log_softmax", i, cand.row_log_softmax(logits),
                   ref.row_log_softmax(logits));

    const auto pos = gen.positive(m, n);
    check.matrices("elem_unary(Log)", i, cand.elem_unary(pos, UnaryOp::Log),
                   ref.elem_unary(pos, UnaryOp::Log));
    const auto x = gen.normal(m, n, 3.0), y = gen.normal(m, n);
    for (auto [op, label] : {std::pair{UnaryOp::NegLog1pSquare, "elem_unary(NegLog1pSquare)"},
                             std::pair{UnaryOp::CauchyGradTerm, "elem_unary(CauchyGradTerm)"}})
      check.matrices(label, i, cand.elem_unary(x, op), ref.elem_unary(x, op));
    for (auto [op, label] : {std::pair{BinaryOp::Add, "elem_binary(Add)"},
                             std::pair{BinaryOp::Sub, "elem_binary(Sub)"},
                             std::pair{BinaryOp::Mul, "elem_binary(Mul)"}})
      check.matrices(label, i, cand.elem_binary(x, y, op), ref.elem_binary(x, y, op));

    const double alpha = gen.scalar();
    check.matrices("axpy", i, cand.axpy(alpha, x, y), ref.axpy(alpha, x, y));

    const auto s = gen.normal(m, n);
    // Sums of signed values can cancel; compare against the sum of magnitudes.
    ++check.report.checks;
    {
      const double got = cand.sum_all(s), want = ref.sum_all(s);
      double magnitude = 0.0;
      for (std::size_t j = 0; j < s.size(); ++j) magnitude += std::abs(s.flat(j));
      if (std::abs(got - want) > check.tol * std::max(magnitude, 1e-300)) {
        std::ostringstream detail;
        detail << "got " << got << ", expected " << want;
        check.report.failures.push_back({"sum_all", i, detail.str()});
      }
    }

    const auto v = gen.normal(m * n, 1);
    check.scalars("dot_self", i, cand.dot_self(v), ref.dot_self(v));
  }
}

void run_concurrency(Checker& check, Precision precision, std::uint64_t seed) {
  CaseGenerator gen(seed ^ 0xc0ffee, precision);
  const auto a = gen.normal(32, 24), b = gen.normal(24, 16);
  const auto expected = check.candidate.row_softmax(check.candidate.matmul(a, b));
  constexpr int kThreads = 4;
  constexpr int kRounds = 8;
  std::vector<int> mismatches(kThreads, 0);
  {
    std::vector<std::jthread> workers;
    for (int t = 0; t < kThreads; ++t) {
      workers.emplace_back([&, t] {
        for (int r = 0; r < kRounds; ++r)
          if (!(check.candidate.row_softmax(check.candidate.matmul(a, b)) == expected))
            ++mismatches[t];
      });
    }
  }
  ++check.report.checks;
  const int total = std::accumulate(mismatches.begin(), mismatches.end(), 0);
  if (total != 0)
    check.report.failures.push_back(
        {"concurrency", 0, std::to_string(total) + " concurrent results differed"});
}

}  // namespace

double conformance_tolerance(Precision precision) {
  return precision == Precision::F32 ? 1e-6 : 1e-12;
}

ConformanceReport run_conformance(const Backend& candidate, Precision precision,
                                  int cases_per_op, std::uint64_t seed) {
  ConformanceReport report;
  report.backend = std::string(candidate.name());
  report.precision = precision;
  report.cases_per_op = cases_per_op;
  if (!candidate.id().supports(precision)) {
    report.failures.push_back({"precision", 0, "backend does not declare support"});
    return report;
  }
  Checker check{candidate, {}, conformance_tolerance(precision), report};
  run_cases(check, precision, cases_per_op, seed);
  if (candidate.id().thread_safe) run_concurrency(check, precision, seed);
  return report;
}

std::vector<std::string> backend_names() { return {"reference", "eigen"}; }

std::unique_ptr<Backend> make_backend(std::string_view name) {
  if (name == "reference") return std::make_unique<ReferenceBackend>();
  if (name == "eigen") return std::make_unique<EigenBackend>();
  throw UnknownBackendError("unknown backend '" + std::string(name) + "'");
}

std::shared_ptr<const Backend> select_backend(std::string_view name, Precision precision) {
  static std::mutex mutex;
  static std::map<std::pair<std::string, Precision>, std::shared_ptr<const Backend>> cache;

  std::lock_guard lock(mutex);
  const auto key = std::pair{std::string(name), precision};
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  std::shared_ptr<const Backend> backend = make_backend(name);
  const auto report = run_conformance(*backend, precision);
  if (!report.passed()) {
    const auto& f = report.failures.front();
    throw std::runtime_error("backend '" + std::string(name) + "' failed conformance at " +
                             std::string(to_string(precision)) + ": " + f.op + " case " +
                             std::to_string(f.case_index) + ": " + f.detail);
  }
  cache.emplace(key, backend);
  return backend;
}

}  // namespace densehmc
