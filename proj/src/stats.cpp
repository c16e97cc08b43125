#include "gibbs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gibbs {

static std::vector<double> batch_averages(const std::vector<double>& s, int min_batches) {
  std::size_t n = s.size();
  if ((int)n < 2 * min_batches)
    throw std::invalid_argument("batch statistics: too few samples for requested batches");
  // Grow the batch count with sqrt(n) but keep batches long for SE accuracy.
  int b = std::max<int>(min_batches, std::min<int>(256, (int)std::sqrt((double)n)));
  std::size_t m = n / b;
  std::vector<double> avg(b, 0.0);
  for (int i = 0; i < b; ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < m; ++j) a += s[i * m + j];
    avg[i] = a / (double)m;
  }
  return avg;
}

Estimate batch_means(const std::vector<double>& s, int min_batches) {
  std::vector<double> avg = batch_averages(s, min_batches);
  int b = (int)avg.size();
  std::size_t m = s.size() / b;
  std::size_t n = m * b;
  double mean = 0.0;
  for (double a : avg) mean += a;
  mean /= b;
  double vb = 0.0;
  for (double a : avg) vb += (a - mean) * (a - mean);
  vb /= (b - 1);
  double vs = 0.0;
  for (std::size_t i = 0; i < n; ++i) vs += (s[i] - mean) * (s[i] - mean);
  vs /= (n > 1 ? (double)(n - 1) : 1.0);
  Estimate e;
  e.mean = mean;
  e.std_error = std::sqrt(vb / b);
  double iact = vs > 0.0 ? std::max(1.0, (double)m * vb / vs) : 1.0;
  e.n_eff = (double)n / iact;
  e.n = n;
  return e;
}

Estimate BatchMeans::result(int min_batches) const { return batch_means(samples_, min_batches); }

static Estimate jackknife_over_batches(const std::vector<double>& s, int min_batches,
                                       double (*stat)(double sum1, double sum2, double cnt)) {
  std::vector<double> avg1 = batch_averages(s, min_batches);
  int b = (int)avg1.size();
  std::size_t m = s.size() / b;
  std::vector<double> avg2(b, 0.0);
  for (int i = 0; i < b; ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double x = s[i * m + j];
      a += x * x;
    }
    avg2[i] = a / (double)m;
  }
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < b; ++i) {
    s1 += avg1[i];
    s2 += avg2[i];
  }
  double full = stat(s1 / b, s2 / b, (double)(m * b));
  std::vector<double> loo(b);
  for (int i = 0; i < b; ++i)
    loo[i] = stat((s1 - avg1[i]) / (b - 1), (s2 - avg2[i]) / (b - 1), (double)(m * (b - 1)));
  double lm = 0.0;
  for (double v : loo) lm += v;
  lm /= b;
  double var = 0.0;
  for (double v : loo) var += (v - lm) * (v - lm);
  var *= (double)(b - 1) / b;
  Estimate e;
  e.mean = full;
  e.std_error = std::sqrt(var);
  e.n = m * b;
  e.n_eff = (double)b;  // jackknife resolution; batches are the effective units
  return e;
}

Estimate variance_estimate(const std::vector<double>& s, int min_batches) {
  return jackknife_over_batches(s, min_batches, [](double m1, double m2, double cnt) {
    double v = m2 - m1 * m1;
    return v * cnt / std::max(1.0, cnt - 1.0);
  });
}

Estimate log_mean_estimate(const std::vector<double>& w, int min_batches) {
  for (double x : w)
    if (!(x > 0.0)) throw std::invalid_argument("log_mean_estimate: weights must be positive");
  return jackknife_over_batches(w, min_batches,
                                [](double m1, double, double) { return std::log(m1); });
}

double top_share(std::vector<double> w, double top_fraction) {
  if (w.empty()) return 0.0;
  std::sort(w.begin(), w.end());
  double total = 0.0;
  for (double x : w) total += x;
  if (total <= 0.0) return 0.0;
  std::size_t k = std::max<std::size_t>(1, (std::size_t)(top_fraction * w.size()));
  double top = 0.0;
  for (std::size_t i = w.size() - k; i < w.size(); ++i) top += w[i];
  return top / total;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need matching x,y with >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= x.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: degenerate x");
  return sxy / sxx;
}

}  // namespace gibbs
