#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "densehmc/dense_matrix.hpp"

namespace densehmc {

// Matrix file:   "densehmc-matrix 1 rows=R cols=C dtype=f64\n" + R*C little-endian values
// Samples file:  "densehmc-samples 1 count=S rows=R cols=C dtype=f64\n" + S records of
//                (int32 chain label, R*C little-endian values)

void write_matrix(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& in);
void save_matrix(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_matrix(const std::filesystem::path& path);

struct StoredSamples {
  std::vector<DenseMatrix> samples;
  std::vector<int> chains;
};

void save_samples(const std::filesystem::path& path, const StoredSamples& stored);
StoredSamples load_samples(const std::filesystem::path& path);

}  // namespace densehmc
