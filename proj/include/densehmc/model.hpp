#pragma once

#include <memory>
#include <span>
#include <vector>

#include "densehmc/backend.hpp"
#include "densehmc/dense_matrix.hpp"

namespace densehmc {

/// Design matrix X (n x p) with one-hot labels Y (n x K).
struct Dataset {
  DenseMatrix x;
  DenseMatrix y;

  std::size_t n() const { return x.rows(); }
  std::size_t p() const { return x.cols(); }
  std::size_t k() const { return y.cols(); }
  Precision precision() const { return x.precision(); }

  /// Throws ContractError unless X and Y agree on n and every row of Y is
  /// one-hot.
  void validate() const;
  Dataset converted(Precision precision) const;
};

enum class Identifiability { Masked, Unmasked };

/// p x K matrix of ones with a zero final column.
DenseMatrix make_mask(std::size_t p, std::size_t k, Precision precision = Precision::F64);

/// Per-row class probabilities softmax(X·B).
DenseMatrix softmax_probs(const Backend& backend, const DenseMatrix& x, const DenseMatrix& b);

/// Multinomial log-likelihood Σᵢ Σₖ yᵢₖ log ψᵢₖ, with log ψ taken from the
/// row-wise log-softmax of X·B.
double log_likelihood(const Backend& backend, const Dataset& data, const DenseMatrix& b);

/// Log-likelihood plus the standard Cauchy log-prior kernel Σ -log(1 + β²).
double log_kernel(const Backend& backend, const Dataset& data, const DenseMatrix& b);

/// Xᵀ(Y - ψ(XB)) + Γ with Γⱼₖ = -2βⱼₖ / (1 + βⱼₖ²), multiplied elementwise by
/// `mask`.
DenseMatrix grad_log_kernel(const Backend& backend, const Dataset& data, const DenseMatrix& b,
                            const DenseMatrix& mask);

/// Same gradient with no identifiability mask applied.
DenseMatrix grad_log_kernel_unmasked(const Backend& backend, const Dataset& data,
                                     const DenseMatrix& b);

/// Posterior-mean class probabilities over `samples` for each row of x_new.
DenseMatrix posterior_mean_probs(const Backend& backend, const DenseMatrix& x_new,
                                 std::span<const DenseMatrix> samples);

/// Class with the highest posterior-mean softmax value per row; ties go to the
/// lowest class index.
std::vector<int> predict(const Backend& backend, const DenseMatrix& x_new,
                         std::span<const DenseMatrix> samples);

/// Row-wise argmax with lowest-index tie-breaking.
std::vector<int> argmax_rows(const DenseMatrix& m);

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Differentiable log-density the sampler draws from.
class Target {
 public:
  virtual ~Target() = default;

  virtual std::size_t rows() const = 0;
  virtual std::size_t cols() const = 0;
  virtual Precision precision() const = 0;
  virtual double log_kernel(const DenseMatrix& theta) const = 0;
  virtual DenseMatrix gradient(const DenseMatrix& theta) const = 0;
  /// 0/1 matrix of free coordinates, or nullptr when unconstrained.
  virtual const DenseMatrix* mask() const { return nullptr; }
};

/// Bayesian multinomial regression posterior over the p x K coefficient matrix.
class MultinomialTarget final : public Target {
 public:
  MultinomialTarget(const Backend& backend, std::shared_ptr<const Dataset> data,
                    Identifiability identifiability = Identifiability::Masked);

  std::size_t rows() const override { return data_->p(); }
  std::size_t cols() const override { return data_->k(); }
  Precision precision() const override { return data_->precision(); }
  double log_kernel(const DenseMatrix& theta) const override;
  DenseMatrix gradient(const DenseMatrix& theta) const override;
  const DenseMatrix* mask() const override {
    return identifiability_ == Identifiability::Masked ? &mask_ : nullptr;
  }

  const Dataset& data() const { return *data_; }

 private:
  const Backend& backend_;
  std::shared_ptr<const Dataset> data_;
  Identifiability identifiability_;
  DenseMatrix mask_;
};

/// Standard normal in `dim` dimensions: log kernel -½θᵀθ, gradient -θ.
class GaussianTarget final : public Target {
 public:
  GaussianTarget(const Backend& backend, std::size_t dim,
                 Precision precision = Precision::F64);

  std::size_t rows() const override { return dim_; }
  std::size_t cols() const override { return 1; }
  Precision precision() const override { return precision_; }
  double log_kernel(const DenseMatrix& theta) const override;
  DenseMatrix gradient(const DenseMatrix& theta) const override;

 private:
  const Backend& backend_;
  std::size_t dim_;
  Precision precision_;
};

std::unique_ptr<Target> as_target(const Backend& backend, std::shared_ptr<const Dataset> data,
                                  Identifiability identifiability = Identifiability::Masked);

}  // namespace densehmc
