#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "zzi/dispersive.hpp"
#include "zzi/microwave.hpp"
#include "zzi/netlist.hpp"
#include "zzi/oracle.hpp"

namespace zzi {

double tune_junction(const ImpedanceProvider& p, int port, double C, double target_omega, MethodVariant v,
                     const SolveOptions& opt = {}, double tol = phys::two_pi * 1.0);

// junction inductances for the plain and the alpha_ii corrected families
struct TunedJunctions {
  std::vector<double> base, corrected;
};
TunedJunctions tune_all(const ImpedanceProvider& p, const std::vector<double>& C, const std::vector<double>& targets,
                        const SolveOptions& opt = {});

struct OracleTuning {
  std::vector<double> lj;
  OracleResult result;
  HamiltonianModel model;
  int iterations = 0;
};

// retune the two junctions until the dressed 10/01 transitions sit on the targets
OracleTuning oracle_tune(const Netlist& lumped, const std::vector<double>& targets, std::vector<double> lj_seed,
                         const OracleOptions& opt, double tol = phys::two_pi * 100.0, int max_iter = 30);

enum class Method { Naive, ZMethod0, ZMethodK0, ZMethod, Exact };
inline constexpr Method kAllMethods[] = {Method::Naive, Method::ZMethod0, Method::ZMethodK0, Method::ZMethod,
                                         Method::Exact};
const char* to_string(Method m);
std::optional<Method> parse_method(const std::string& s);
inline MethodVariant variant_of(Method m) { return static_cast<MethodVariant>(static_cast<int>(m)); }

struct Device {
  ProviderPtr provider;
  std::vector<double> caps;
  std::optional<Netlist> netlist;  // needed for the oracle
};

using DeviceFactory = std::function<Device(double)>;

enum class SweepParam { BusFrequency, Qubit2Frequency, Element };

struct SweepSpec {
  SweepParam param = SweepParam::BusFrequency;
  std::string element;
  double start = 0, stop = 0;  // Hz for frequencies, SI for element values
  int points = 2;
  std::vector<double> targets_hz;  // per qubit; entry 1 replaced by the swept value for Qubit2Frequency
  std::vector<double> fixed_lj;    // used when no targets
  std::vector<double> values() const;
  void validate() const;
};

struct SweepOptions {
  int threads = 0;  // 0 = hardware concurrency
  SolveOptions solve;
  OracleOptions oracle;
  double omega_max = phys::two_pi * 10e9;  // for line discretization
  int max_modes = 12;
};

struct SweepRow {
  double param = 0;
  bool ok = true;
  std::string error;
  double J = NAN;  // rad/s, plain family
  double J_corrected = NAN;
  double omega1 = NAN, omega2 = NAN;
  std::vector<double> lj_base, lj_corrected, lj_oracle;
  double zz[5] = {NAN, NAN, NAN, NAN, NAN};  // indexed by Method, rad/s
  double exact_convergence = NAN;
  bool straddling = false;
  std::vector<std::string> flags;
  double zz_of(Method m) const { return zz[static_cast<int>(m)]; }
};

SweepRow evaluate_point(double param, const SweepSpec& spec, const Device& dev, const std::set<Method>& methods,
                        const SweepOptions& opt);
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const DeviceFactory& factory, const std::set<Method>& methods,
                                const SweepOptions& opt = {});

}  // namespace zzi
