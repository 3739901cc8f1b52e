#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "zzi/constants.hpp"
#include "zzi/microwave.hpp"

namespace zzi {

enum class MethodVariant { Naive, ZMethod0, ZMethodK0, ZMethod };

inline constexpr MethodVariant kAllVariants[] = {MethodVariant::Naive, MethodVariant::ZMethod0, MethodVariant::ZMethodK0,
                                                 MethodVariant::ZMethod};

const char* to_string(MethodVariant v);
std::optional<MethodVariant> parse_variant(const std::string& s);
// only the full Z-method uses the alpha_ii corrected anharmonicity
inline bool corrected_delta(MethodVariant v) { return v == MethodVariant::ZMethod; }

struct QubitParams {
  int port = 0;
  bool corrected = false;  // delta and L_i from the alpha_ii corrected charging energy
  double omega = 0;        // rad/s
  double L_J = 0;          // H
  double L = 0;            // H, renormalized
  double C = 0;            // F
  double E_C = 0;          // rad/s
  double delta = 0;        // rad/s
  double alpha_ii = 1;
  double Z_char = 0;  // ohm
  double omega_J = 0;
  int iterations = 0;

  double E_C_joule() const { return E_C * phys::hbar; }
};

struct SolveOptions {
  bool charging = true;
  double bracket = 0.4;
  int grid = 240;
  double tol = phys::two_pi * 1.0;  // rad/s, alpha_ii outer loop
  int max_iter = 100;
};

QubitParams solve_qubit(const ImpedanceProvider& p, int port, double L_J, double C, MethodVariant variant,
                        const SolveOptions& opt = {});

// anharmonicity from the charging energy, optionally scaled by alpha_ii^2
double anharmonicity(double E_C, double omega, double alpha_ii = 1.0);
double alpha_ii(double omega, double L, double C, double im_z, double im_dz);

double exchange_j(const QubitParams& qi, const QubitParams& qj, const ImpedanceProvider& p);

struct Corrections {
  double alpha_ij = 0, alpha_ji = 0;
  double a_di_i = 1, a_di_j = 1, a_dj_i = 1, a_dj_j = 1;
  double J_delta_i = 0, J_delta_j = 0;
  // additive forms J + delta * sqrt(w_i/w_j) * alpha_ij, kept as a cross-check
  double J_delta_i_add = 0, J_delta_j_add = 0;
  double identity_residual = 0;
};

struct CouplingInputs {
  double J = 0;
  Corrections corr;
};

Corrections coupling_corrections(const QubitParams& qi, const QubitParams& qj, const ImpedanceProvider& p);
// pure algebra given the trans-impedance reactances at the two qubit frequencies
Corrections coupling_corrections(const QubitParams& qi, const QubitParams& qj, double x_at_i, double x_at_j);
double exchange_j(const QubitParams& qi, const QubitParams& qj, double x_at_i, double x_at_j);

double cross_kerr(const QubitParams& qi, const QubitParams& qj, const Corrections& c);
double zz_rate(const QubitParams& qi, const QubitParams& qj, const CouplingInputs& in, MethodVariant v);

struct CouplingReport {
  int i = 0, j = 1;
  double J = 0;
  double Delta = 0;
  Corrections corr;
  bool straddling = false;
  std::vector<std::string> warnings;
  std::map<MethodVariant, double> zz;
};

// zz filled for the variants consistent with how the qubits were solved
CouplingReport couple(const QubitParams& qi, const QubitParams& qj, const ImpedanceProvider& p);

struct DeviceReport {
  std::vector<QubitParams> base;       // plain charging-energy anharmonicity
  std::vector<QubitParams> corrected;  // alpha_ii corrected
  struct Pair {
    int i, j;
    CouplingReport base, corrected;
    std::map<MethodVariant, double> zz;
  };
  std::vector<Pair> pairs;
};

DeviceReport analyze(const ImpedanceProvider& p, const std::vector<double>& C, const std::vector<double>& lj_base,
                     const std::vector<double>& lj_corrected, const SolveOptions& opt = {});

}  // namespace zzi
