#pragma once

#include <cstddef>
#include <vector>

namespace gibbs {

// Scalar estimate with a batch-means standard error. n_eff is the sample count
// deflated by the estimated integrated autocorrelation.
struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  double n_eff = 0.0;
  std::size_t n = 0;
};

// Collects correlated scalar samples; result() rebatches into at least
// min_batches equal batches and reports the batch-means standard error.
class BatchMeans {
 public:
  void add(double x) { samples_.push_back(x); }
  void reserve(std::size_t n) { samples_.reserve(n); }
  std::size_t size() const { return samples_.size(); }
  const std::vector<double>& samples() const { return samples_; }
  Estimate result(int min_batches = 32) const;

 private:
  std::vector<double> samples_;
};

Estimate batch_means(const std::vector<double>& samples, int min_batches = 32);

// Sample variance (unbiased) with a batch-jackknife standard error.
Estimate variance_estimate(const std::vector<double>& samples, int min_batches = 32);

// log(mean(w)) with a delete-one-batch jackknife standard error; used for
// moment generating functionals of positive weights.
Estimate log_mean_estimate(const std::vector<double>& weights, int min_batches = 32);

// Fraction of the total sum carried by the largest top_fraction of weights;
// heavy-tail diagnostic for MGF estimators.
double top_share(std::vector<double> weights, double top_fraction);

// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace gibbs
