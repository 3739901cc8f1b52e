#include "zzi/fit.hpp"

#include <fmt/format.h>

#include <cmath>

#include "zzi/errors.hpp"

namespace zzi {

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::Validation, "fit needs equally many x and y values");
  const std::size_t n = x.size();
  if (n < 2) throw Error(ErrorKind::Validation, "fit needs at least 2 points");
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorKind::Validation, "fit needs variance in x");
  LinearFit f;
  f.n = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = y[k] - (f.slope * x[k] + f.intercept);
    ss += r * r;
  }
  f.sigma = std::sqrt(ss / n);
  return f;
}

std::string describe(const LinearFit& f, const std::string& unit) {
  return fmt::format("y = {:.3f}x {} {:.3f}, sigma = {:.1f} {}", f.slope, f.intercept < 0 ? '-' : '+',
                     std::abs(f.intercept), f.sigma, unit);
}

}  // namespace zzi
