#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "densehmc/backend.hpp"

namespace densehmc {

struct ConformanceFailure {
  std::string op;
  int case_index = 0;
  std::string detail;
};

struct ConformanceReport {
  std::string backend;
  Precision precision = Precision::F64;
  int cases_per_op = 0;
  int checks = 0;
  std::vector<ConformanceFailure> failures;

  bool passed() const { return failures.empty(); }
};

/// Relative tolerance a backend must meet against the reference backend.
double conformance_tolerance(Precision precision);

/// Runs every contract operation on `cases_per_op` randomized shape/value
/// cases and compares against ReferenceBackend. Backends that declare
/// themselves thread-safe are also exercised from several threads at once.
ConformanceReport run_conformance(const Backend& candidate, Precision precision,
                                  int cases_per_op = 100, std::uint64_t seed = 0x5eed);

class UnknownBackendError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::vector<std::string> backend_names();

/// Constructs a backend by name without any conformance gate.
std::unique_ptr<Backend> make_backend(std::string_view name);

/// Returns a backend that has passed the conformance suite at `precision`.
/// Results are cached per (name, precision); a failing backend throws.
std::shared_ptr<const Backend> select_backend(std::string_view name, Precision precision);

}  // namespace densehmc
