#include "zzi/circuits.hpp"

#include <cmath>

namespace zzi {

double bus_inductance(double fb_hz, const BusCircuit& c) {
  const double wb = phys::two_pi * fb_hz;
  const double loaded = c.cb + 2 * c.cc * c.cq / (c.cc + c.cq);
  return 1.0 / (wb * wb * loaded);
}

Netlist bus_netlist(double fb_hz, const BusCircuit& c) {
  using K = ElementKind;
  return Netlist({
      {K::Capacitor, "cq1", "n1", "0", c.cq},
      {K::Capacitor, "cq2", "n2", "0", c.cq},
      {K::Capacitor, "cc1", "n1", "b", c.cc},
      {K::Capacitor, "cc2", "b", "n2", c.cc},
      {K::Capacitor, "cb", "b", "0", c.cb},
      {K::Inductor, "lb", "b", "0", bus_inductance(fb_hz, c)},
      {K::Junction, "q1", "n1", "0", c.lj},
      {K::Junction, "q2", "n2", "0", c.lj},
  });
}

Netlist cancel_coupler_netlist(double eps_eff, const CancelCoupler& c) {
  using K = ElementKind;
  auto line = [&](const char* name, const char* a, const char* b, double len) {
    Element e{K::Line, name, a, b, c.z0};
    e.length = len;
    e.eps_eff = eps_eff;
    return e;
  };
  return Netlist({
      {K::Capacitor, "c12a", "a1", "a2", c.c12},
      {K::Capacitor, "c1ga", "a1", "0", c.cg},
      {K::Capacitor, "c2ga", "a2", "0", c.cg},
      {K::Capacitor, "c12b", "b1", "b2", c.c12},
      {K::Capacitor, "c1gb", "b1", "0", c.cg},
      {K::Capacitor, "c2gb", "b2", "0", c.cg},
      {K::Junction, "qa", "a1", "a2", c.lj},
      {K::Junction, "qb", "b1", "b2", c.lj},
      {K::Capacitor, "cc1a", "a2", "t1", c.cc1},
      line("l1", "t1", "t2", c.l1),
      {K::Capacitor, "cc1b", "t2", "b1", c.cc1},
      {K::Capacitor, "cc2a", "a2", "u1", c.cc2},
      line("l2a", "u1", "m", c.l2),
      line("l2b", "m", "u2", c.l2),
      {K::Capacitor, "cc2b", "u2", "b1", c.cc2},
      line("l3", "m", "0", c.l3),
  });
}

std::shared_ptr<RationalZ12> two_zero_rational(double c) {
  const double g = phys::two_pi * 1e9;
  return std::make_shared<RationalZ12>(-7.97e10, std::vector<double>{4.5 * g, 5.5 * g},
                                       std::vector<double>{0.0, 4.0 * g, 6.25 * g}, c, c);
}

}  // namespace zzi
