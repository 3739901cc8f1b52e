#pragma once

#include <string>
#include <vector>

namespace zzi {

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double sigma = 0;  // standard deviation of the residuals
  int n = 0;
};

// ordinary least squares y = slope x + intercept
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);
std::string describe(const LinearFit& f, const std::string& unit = "kHz");

}  // namespace zzi
