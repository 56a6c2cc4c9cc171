#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "hall/errors.hpp"

namespace hall {

// Compensated (Kahan) summation; used wherever a sum feeds a tight tolerance.
class KahanSum {
 public:
  void add(double x) {
    double y = x - c_;
    double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double mean(const std::vector<double>& xs) {
  KahanSum s;
  for (double x : xs) s.add(x);
  return xs.empty() ? 0.0 : s.value() / static_cast<double>(xs.size());
}

// Standard error of the mean (sample stddev / sqrt(n)).
inline double stderr_mean(const std::vector<double>& xs) {
  std::size_t n = xs.size();
  if (n < 2) return 0.0;
  double m = mean(xs);
  KahanSum ss;
  for (double x : xs) ss.add((x - m) * (x - m));
  return std::sqrt(ss.value() / (static_cast<double>(n - 1) * static_cast<double>(n)));
}

struct BinomialEstimate {
  double p_hat = 0.0;
  double stderr_p = 0.0;
  std::size_t successes = 0;
  std::size_t trials = 0;
};

inline BinomialEstimate binomial_estimate(std::size_t successes, std::size_t trials) {
  BinomialEstimate e;
  e.successes = successes;
  e.trials = trials;
  if (trials == 0) return e;
  e.p_hat = static_cast<double>(successes) / static_cast<double>(trials);
  e.stderr_p = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(trials));
  return e;
}

// Ordinary least squares y = intercept + slope*x with normal-theory slope
// standard error and R^2. 95% CI half-width = 1.96 * slope_stderr.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 1.0;
  std::size_t n = 0;
  double slope_ci() const { return 1.96 * slope_stderr; }
};

inline LinearFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, Err::InsufficientDecay,
          "fit_line needs >= 2 points with equal-length inputs");
  std::size_t n = xs.size();
  double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, Err::InsufficientDecay, "fit_line: degenerate abscissae");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ys[i] - (f.intercept + f.slope * xs[i]);
    ss_res += r * r;
  }
  f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  if (n > 2) {
    double sigma2 = ss_res / static_cast<double>(n - 2);
    f.slope_stderr = std::sqrt(sigma2 / sxx);
  }
  return f;
}

// Least squares through the origin, y = slope*x.  R^2 is the uncentered
// version (1 - RSS/Σy²), the natural fit quality for a no-intercept model.
inline LinearFit fit_through_origin(const std::vector<double>& xs,
                                    const std::vector<double>& ys) {
  require(xs.size() == ys.size() && !xs.empty(), Err::InsufficientDecay,
          "fit_through_origin needs >= 1 point with equal-length inputs");
  std::size_t n = xs.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  require(sxx > 0.0, Err::InsufficientDecay, "fit_through_origin: degenerate abscissae");
  LinearFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ys[i] - f.slope * xs[i];
    ss_res += r * r;
  }
  f.r2 = (syy > 0.0) ? 1.0 - ss_res / syy : 1.0;
  if (n > 1) f.slope_stderr = std::sqrt((ss_res / static_cast<double>(n - 1)) / sxx);
  return f;
}

}  // namespace hall
