#pragma once

// Small least-squares helpers for sweep reports: polynomial fits with
// residuals and R^2, and a two-sided t-test on a regression slope.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

namespace dfr::stats {

struct PolyFit {
  int degree = 0;
  std::vector<double> coeffs;  // ascending powers: c0 + c1 x + c2 x^2 ...
  double rss = 0.0;            // residual sum of squares
  double r2 = 0.0;

  double operator()(double x) const {
    double y = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) y = y * x + coeffs[k];
    return y;
  }
};

inline PolyFit polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  if (x.size() != y.size()) throw std::invalid_argument("polyfit: x and y differ in length");
  if (degree < 0) throw std::invalid_argument("polyfit: negative degree");
  if (x.size() < static_cast<std::size_t>(degree) + 1) {
    throw std::invalid_argument("insufficient points for fit");
  }
  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(m, degree + 1);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double p = 1.0;
    for (int k = 0; k <= degree; ++k, p *= x[static_cast<std::size_t>(i)]) a(i, k) = p;
    b(i) = y[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd c = a.householderQr().solve(b);

  PolyFit fit;
  fit.degree = degree;
  fit.coeffs.assign(c.data(), c.data() + c.size());
  double mean = b.mean();
  double tss = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double r = b(i) - fit(x[static_cast<std::size_t>(i)]);
    fit.rss += r * r;
    tss += (b(i) - mean) * (b(i) - mean);
  }
  fit.r2 = tss > 0 ? 1.0 - fit.rss / tss : (fit.rss == 0 ? 1.0 : 0.0);
  return fit;
}

struct SlopeTest {
  double slope = 0.0;
  double intercept = 0.0;
  double std_error = 0.0;
  double t = 0.0;
  double p_value = 1.0;  // two-sided
  double dof = 0.0;
};

/// Ordinary least squares y = a + b x; H0: b = 0.
inline SlopeTest slope_test(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("slope_test needs >= 3 paired points");
  const double m = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("slope_test: x has no spread");
  SlopeTest out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - out.intercept - out.slope * x[i];
    rss += r * r;
  }
  out.dof = m - 2;
  out.std_error = std::sqrt(rss / out.dof / sxx);
  if (out.std_error == 0) {
    out.t = out.slope == 0 ? 0.0 : INFINITY;
    out.p_value = out.slope == 0 ? 1.0 : 0.0;
    return out;
  }
  out.t = out.slope / out.std_error;
  boost::math::students_t dist(out.dof);
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  return out;
}

}  // namespace dfr::stats
