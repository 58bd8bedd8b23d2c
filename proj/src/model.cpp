#include "densehmc/model.hpp"

#include <algorithm>

namespace densehmc {

void Dataset::validate() const {
  if (x.rows() != y.rows())
    throw ContractError("Dataset: X has " + std::to_string(x.rows()) + " rows but Y has " +
                        std::to_string(y.rows()));
  if (x.precision() != y.precision())
    throw ContractError("Dataset: X and Y precision differ");
  if (y.cols() < 2) throw ContractError("Dataset: need at least 2 classes");
  for (std::size_t i = 0; i < y.rows(); ++i) {
    int ones = 0;
    for (std::size_t k = 0; k < y.cols(); ++k) {
      const double v = y(i, k);
      if (v == 1.0)
        ++ones;
      else if (v != 0.0)
        throw ContractError("Dataset: Y(" + std::to_string(i) + ", " + std::to_string(k) +
                            ") is neither 0 nor 1");
    }
    if (ones != 1)
      throw ContractError("Dataset: row " + std::to_string(i) + " of Y is not one-hot");
  }
}

Dataset Dataset::converted(Precision precision) const {
  return {x.converted(precision), y.converted(precision)};
}

DenseMatrix make_mask(std::size_t p, std::size_t k, Precision precision) {
  DenseMatrix m = DenseMatrix::filled(p, k, 1.0, precision);
  for (std::size_t j = 0; j < p && k > 0; ++j) m.set(j, k - 1, 0.0);
  return m;
}

DenseMatrix softmax_probs(const Backend& backend, const DenseMatrix& x, const DenseMatrix& b) {
  return backend.row_softmax(backend.matmul(x, b));
}

double log_likelihood(const Backend& backend, const Dataset& data, const DenseMatrix& b) {
  const DenseMatrix log_probs = backend.row_log_softmax(backend.matmul(data.x, b));
  return backend.sum_all(backend.elem_binary(data.y, log_probs, BinaryOp::Mul));
}

double log_kernel(const Backend& backend, const Dataset& data, const DenseMatrix& b) {
  // The pinned column is zero and -log(1 + 0) = 0, so it adds nothing.
  return log_likelihood(backend, data, b) +
         backend.sum_all(backend.elem_unary(b, UnaryOp::NegLog1pSquare));
}

DenseMatrix grad_log_kernel_unmasked(const Backend& backend, const Dataset& data,
                                     const DenseMatrix& b) {
  const DenseMatrix residual =
      backend.elem_binary(data.y, softmax_probs(backend, data.x, b), BinaryOp::Sub);
  return backend.elem_binary(backend.matmul_transpose_left(data.x, residual),
                             backend.elem_unary(b, UnaryOp::CauchyGradTerm), BinaryOp::Add);
}

DenseMatrix grad_log_kernel(const Backend& backend, const Dataset& data, const DenseMatrix& b,
                            const DenseMatrix& mask) {
  return backend.elem_binary(grad_log_kernel_unmasked(backend, data, b), mask, BinaryOp::Mul);
}

DenseMatrix posterior_mean_probs(const Backend& backend, const DenseMatrix& x_new,
                                 std::span<const DenseMatrix> samples) {
  if (samples.empty()) throw ContractError("predict: sample store is empty");
  DenseMatrix total = softmax_probs(backend, x_new, samples.front());
  for (const auto& b : samples.subspan(1))
    total = backend.elem_binary(total, softmax_probs(backend, x_new, b), BinaryOp::Add);
  return backend.axpy(1.0 / static_cast<double>(samples.size()) - 1.0, total, total);
}

std::vector<int> argmax_rows(const DenseMatrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double best = m(i, 0);
    for (std::size_t k = 1; k < m.cols(); ++k) {
      if (m(i, k) > best) {
        best = m(i, k);
        out[i] = static_cast<int>(k);
      }
    }
  }
  return out;
}

std::vector<int> predict(const Backend& backend, const DenseMatrix& x_new,
                         std::span<const DenseMatrix> samples) {
  return argmax_rows(posterior_mean_probs(backend, x_new, samples));
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size())
    throw ContractError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                        std::to_string(truth.size()) + " labels");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

MultinomialTarget::MultinomialTarget(const Backend& backend,
                                     std::shared_ptr<const Dataset> data,
                                     Identifiability identifiability)
    : backend_(backend),
      data_(std::move(data)),
      identifiability_(identifiability),
      mask_(make_mask(data_->p(), data_->k(), data_->precision())) {}

double MultinomialTarget::log_kernel(const DenseMatrix& theta) const {
  return densehmc::log_kernel(backend_, *data_, theta);
}

DenseMatrix MultinomialTarget::gradient(const DenseMatrix& theta) const {
  if (identifiability_ == Identifiability::Masked)
    return grad_log_kernel(backend_, *data_, theta, mask_);
  return grad_log_kernel_unmasked(backend_, *data_, theta);
}

GaussianTarget::GaussianTarget(const Backend& backend, std::size_t dim, Precision precision)
    : backend_(backend), dim_(dim), precision_(precision) {}

double GaussianTarget::log_kernel(const DenseMatrix& theta) const {
  return -0.5 * backend_.dot_self(theta);
}

DenseMatrix GaussianTarget::gradient(const DenseMatrix& theta) const {
  // -θ computed as (-2)·θ + θ
  return backend_.axpy(-2.0, theta, theta);
}

std::unique_ptr<Target> as_target(const Backend& backend, std::shared_ptr<const Dataset> data,
                                  Identifiability identifiability) {
  data->validate();
  return std::make_unique<MultinomialTarget>(backend, std::move(data), identifiability);
}

}  // namespace densehmc
