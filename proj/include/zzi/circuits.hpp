#pragma once

#include <memory>

#include "zzi/constants.hpp"
#include "zzi/microwave.hpp"
#include "zzi/netlist.hpp"

namespace zzi {

// Two grounded transmons capacitively coupled through one lumped LC bus.
struct BusCircuit {
  double cq = 60 * phys::fF;
  double cc = 5 * phys::fF;
  double cb = 500 * phys::fF;
  double lj = 16 * phys::nH;
};

// bus inductance placing the loaded bus resonance at f_b
double bus_inductance(double fb_hz, const BusCircuit& c = {});
Netlist bus_netlist(double fb_hz, const BusCircuit& c = {});

// Floating transmons joined by a lambda/2 arm and a second arm split by a shorted lambda/4 stub.
struct CancelCoupler {
  double c12 = 36 * phys::fF;
  double cg = 46 * phys::fF;
  double cc1 = 8 * phys::fF;
  double cc2 = 12 * phys::fF;
  double l1 = 1.0 * phys::mm;
  double l2 = 0.5 * phys::mm;  // each half of the interrupted arm
  double l3 = 3.75 * phys::mm;
  double z0 = 50.0;
  double lj = 15 * phys::nH;
};

// phase-velocity knob fitted to the coupler's stub mode, first ZZ zero and J near 5.1 GHz
inline constexpr double kCancelEpsEff = 6.30;

Netlist cancel_coupler_netlist(double eps_eff = kCancelEpsEff, const CancelCoupler& c = {});

// Two-zero trans-impedance with 65 fF shunts.
std::shared_ptr<RationalZ12> two_zero_rational(double c = 65 * phys::fF);

}  // namespace zzi
