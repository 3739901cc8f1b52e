#pragma once

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

namespace zzi {

enum class ElementKind { Capacitor, Inductor, Junction, Line };

// All values SI. `value` is C (F), L (H), L_J (H) or Z0 (ohm) depending on kind.
struct Element {
  ElementKind kind = ElementKind::Capacitor;
  std::string name;
  std::string n1, n2;
  double value = 0.0;
  double cj = 0.0;
  double length = 0.0;
  double eps_eff = 6.45;
  bool eps_explicit = false;
};

struct QubitPort {
  std::string junction;
  std::string n1, n2;
};

inline constexpr double kDefaultEpsEff = 6.45;

class Netlist {
 public:
  Netlist() = default;
  explicit Netlist(std::vector<Element> elements);  // validates

  const std::vector<Element>& elements() const { return elements_; }
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<QubitPort>& ports() const { return ports_; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  int port_count() const { return static_cast<int>(ports_.size()); }

  // -1 for ground
  int node_index(const std::string& n) const;
  const Element* find(const std::string& name) const;

  Netlist with_value(const std::string& name, double value) const;  // SI; lines take their length
  Netlist with_junctions(const std::vector<double>& lj) const;
  Netlist with_default_eps(double eps) const;
  std::vector<double> junction_inductances() const;

 private:
  std::vector<Element> elements_;
  std::vector<std::string> nodes_;
  std::vector<QubitPort> ports_;
};

bool is_ground(std::string_view node);

Netlist parse_netlist(std::string_view text);
Netlist load_netlist(const std::string& path);
std::string serialize(const Netlist& net);

// Maxwell capacitance matrix seen at the qubit ports (F). Lines are open unless
// lump_lines is set, in which case C_line/2 sits at each end.
Eigen::MatrixXd capacitive_reduction(const Netlist& net, bool lump_lines = false);

}  // namespace zzi
