#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "zzi/constants.hpp"
#include "zzi/netlist.hpp"

namespace zzi {

// Full keeps the exact cosine; the Taylor options stop at phi^4 or phi^6.
enum class CosineModel { Full, Order4, Order6 };

const char* to_string(CosineModel m);

struct Truncation {
  int qubit_levels = 14;
  int other_levels = 5;
  int excitation_cap = 14;  // total quanta once a non-qubit mode is excited; <= 0 disables

  Truncation bumped() const {
    return {qubit_levels + 1, other_levels + 1, excitation_cap > 0 ? excitation_cap + 1 : 0};
  }
  static Truncation uniform(int levels) { return {levels, levels, 0}; }
};

struct OracleOptions {
  Truncation truncation;
  CosineModel cosine = CosineModel::Full;
  bool nonlinear = true;
  double overlap_threshold = 0.5;
  bool convergence = true;
  double tolerance = phys::two_pi * 100.0;  // rad/s on the truncation bump
};

struct HamiltonianModel {
  std::vector<double> mode_freqs;  // rad/s
  Eigen::MatrixXd phase_zpf;       // junction x mode
  std::vector<double> E_J;         // J
  std::vector<int> qubit_modes;    // dominant mode per junction
};

using Occupation = std::vector<int>;  // per junction/qubit mode

struct DressedSpectrum {
  std::vector<double> energies;  // lowest levels, rad/s, ground at zero
  std::map<Occupation, int> labels;
  std::map<Occupation, double> overlap;
};

struct OracleResult {
  double zz = 0;
  double omega10 = 0, omega01 = 0;
  double anharm1 = 0, anharm2 = 0;
  double convergence = 0;  // |zz(bumped) - zz|
  bool converged = true;
  double min_overlap = 1;
  int dimension = 0;
  double hermiticity = 0;
  DressedSpectrum spectrum;
};

int default_segments(const Element& line, double omega_max);
Netlist discretize_lines(const Netlist& net, int segments_per_line);
Netlist discretize_lines(const Netlist& net, double omega_max, int max_modes = 0);

HamiltonianModel linear_normal_modes(const Netlist& lumped);

// one diagonalization at a fixed truncation, labels 00/10/01/11/20/02 of the first two junctions
OracleResult diagonalize(const HamiltonianModel& m, const Truncation& t, const OracleOptions& opt);
OracleResult oracle_zz(const HamiltonianModel& m, const OracleOptions& opt = {});

// <m| exp(i theta (a + a^dag)) |n>
Eigen::MatrixXcd displacement_elements(double theta, int levels);
// exact matrix of (a + a^dag)^p truncated to `levels`
Eigen::MatrixXd position_power(int p, int levels);

}  // namespace zzi
