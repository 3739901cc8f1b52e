#include "zzi/netlist.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "zzi/constants.hpp"
#include "zzi/errors.hpp"

namespace zzi {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double number(std::string_view tok, int line, std::string_view what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw Error(ErrorKind::Syntax, fmt::format("line {}: bad number '{}' for {}", line, tok, what), line);
  return v;
}

std::string canon_node(std::string_view n) { return is_ground(n) ? std::string("0") : std::string(n); }

struct KeyVals {
  std::vector<std::pair<std::string, std::string_view>> kv;
  const std::string_view* get(const std::string& k) const {
    for (auto& [key, v] : kv)
      if (key == k) return &v;
    return nullptr;
  }
};

KeyVals parse_keys(const std::vector<std::string_view>& toks, std::size_t from, int line,
                   std::initializer_list<const char*> allowed) {
  KeyVals out;
  for (std::size_t i = from; i < toks.size(); ++i) {
    auto eq = toks[i].find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw Error(ErrorKind::Syntax, fmt::format("line {}: expected KEY=value, got '{}'", line, toks[i]), line);
    std::string key = upper(toks[i].substr(0, eq));
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(ErrorKind::Syntax, fmt::format("line {}: unknown parameter '{}'", line, key), line);
    if (out.get(key))
      throw Error(ErrorKind::Syntax, fmt::format("line {}: repeated parameter '{}'", line, key), line);
    out.kv.emplace_back(key, toks[i].substr(eq + 1));
  }
  return out;
}

void validate_element(const Element& el, int line) {
  auto bad = [&](const std::string& msg) {
    throw Error(ErrorKind::Validation, line ? fmt::format("line {}: {}: {}", line, el.name, msg)
                                            : fmt::format("{}: {}", el.name, msg),
                line);
  };
  bool g1 = is_ground(el.n1), g2 = is_ground(el.n2);
  if (!g1 && !g2 && el.n1 == el.n2) bad("both terminals on the same node");
  switch (el.kind) {
    case ElementKind::Capacitor:
      if (!(el.value > 0)) bad("nonpositive capacitance");
      break;
    case ElementKind::Inductor:
      if (!(el.value > 0)) bad("nonpositive inductance");
      break;
    case ElementKind::Junction:
      if (!(el.value > 0)) bad("nonpositive junction inductance");
      if (!(el.cj >= 0)) bad("negative junction capacitance");
      if (g1 && g2) bad("junction references zero non-ground nodes");
      break;
    case ElementKind::Line:
      if (!(el.value > 0)) bad("nonpositive characteristic impedance");
      if (!(el.length > 0)) bad("nonpositive line length");
      if (!(el.eps_eff > 0)) bad("nonpositive effective permittivity");
      if (g1 && g2) bad("line references zero non-ground nodes");
      break;
  }
}

}  // namespace

bool is_ground(std::string_view node) { return node == "0" || upper(node) == "GND"; }

Netlist::Netlist(std::vector<Element> elements) : elements_(std::move(elements)) {
  std::set<std::string> names;
  for (auto& el : elements_) {
    if (el.name.empty()) throw Error(ErrorKind::Validation, "element without a name");
    if (!names.insert(el.name).second)
      throw Error(ErrorKind::Validation, fmt::format("duplicate element name '{}'", el.name));
    el.n1 = canon_node(el.n1);
    el.n2 = canon_node(el.n2);
    validate_element(el, 0);
    for (auto* n : {&el.n1, &el.n2})
      if (*n != "0" && std::find(nodes_.begin(), nodes_.end(), *n) == nodes_.end()) nodes_.push_back(*n);
    if (el.kind == ElementKind::Junction) ports_.push_back({el.name, el.n1, el.n2});
  }
}

int Netlist::node_index(const std::string& n) const {
  if (is_ground(n)) return -1;
  auto it = std::find(nodes_.begin(), nodes_.end(), n);
  if (it == nodes_.end()) throw Error(ErrorKind::Validation, fmt::format("unknown node '{}'", n));
  return static_cast<int>(it - nodes_.begin());
}

const Element* Netlist::find(const std::string& name) const {
  for (auto& el : elements_)
    if (el.name == name) return &el;
  return nullptr;
}

Netlist Netlist::with_value(const std::string& name, double value) const {
  auto els = elements_;
  auto it = std::find_if(els.begin(), els.end(), [&](const Element& e) { return e.name == name; });
  if (it == els.end()) throw Error(ErrorKind::Validation, fmt::format("no element named '{}'", name));
  if (it->kind == ElementKind::Line)
    it->length = value;
  else
    it->value = value;
  return Netlist(std::move(els));
}

Netlist Netlist::with_junctions(const std::vector<double>& lj) const {
  if (lj.size() != ports_.size())
    throw Error(ErrorKind::Validation, fmt::format("expected {} junction inductances, got {}", ports_.size(), lj.size()));
  auto els = elements_;
  std::size_t k = 0;
  for (auto& el : els)
    if (el.kind == ElementKind::Junction) el.value = lj[k++];
  return Netlist(std::move(els));
}

Netlist Netlist::with_default_eps(double eps) const {
  auto els = elements_;
  for (auto& el : els)
    if (el.kind == ElementKind::Line && !el.eps_explicit) el.eps_eff = eps;
  return Netlist(std::move(els));
}

std::vector<double> Netlist::junction_inductances() const {
  std::vector<double> out;
  for (auto& el : elements_)
    if (el.kind == ElementKind::Junction) out.push_back(el.value);
  return out;
}

Netlist parse_netlist(std::string_view text) {
  std::vector<Element> els;
  std::vector<int> lines;
  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    if (auto h = raw.find('#'); h != std::string_view::npos) raw = raw.substr(0, h);
    auto toks = split_ws(raw);
    if (toks.empty()) continue;

    std::string kind = upper(toks[0]);
    Element el;
    if (kind == "C" || kind == "L") {
      if (toks.size() != 5)
        throw Error(ErrorKind::Syntax, fmt::format("line {}: expected '{} <name> <n1> <n2> <value>'", lineno, kind), lineno);
      el.kind = kind == "C" ? ElementKind::Capacitor : ElementKind::Inductor;
      el.value = number(toks[4], lineno, "value") * (kind == "C" ? phys::fF : phys::nH);
    } else if (kind == "JJ") {
      if (toks.size() < 5)
        throw Error(ErrorKind::Syntax, fmt::format("line {}: expected 'JJ <name> <n1> <n2> LJ=<nH> [CJ=<fF>]'", lineno), lineno);
      auto kv = parse_keys(toks, 4, lineno, {"LJ", "CJ"});
      auto lj = kv.get("LJ");
      if (!lj) throw Error(ErrorKind::Syntax, fmt::format("line {}: junction needs LJ=", lineno), lineno);
      el.kind = ElementKind::Junction;
      el.value = number(*lj, lineno, "LJ") * phys::nH;
      if (auto cj = kv.get("CJ")) el.cj = number(*cj, lineno, "CJ") * phys::fF;
    } else if (kind == "TL") {
      if (toks.size() < 6)
        throw Error(ErrorKind::Syntax, fmt::format("line {}: expected 'TL <name> <n1> <n2> Z0=<ohm> LEN=<mm> [EEFF=<x>]'", lineno), lineno);
      auto kv = parse_keys(toks, 4, lineno, {"Z0", "LEN", "EEFF"});
      auto z0 = kv.get("Z0");
      auto len = kv.get("LEN");
      if (!z0 || !len) throw Error(ErrorKind::Syntax, fmt::format("line {}: line needs Z0= and LEN=", lineno), lineno);
      el.kind = ElementKind::Line;
      el.value = number(*z0, lineno, "Z0");
      el.length = number(*len, lineno, "LEN") * phys::mm;
      if (auto ee = kv.get("EEFF")) {
        el.eps_eff = number(*ee, lineno, "EEFF");
        el.eps_explicit = true;
      }
    } else {
      throw Error(ErrorKind::Syntax, fmt::format("line {}: unknown element kind '{}'", lineno, toks[0]), lineno);
    }
    el.name = std::string(toks[1]);
    el.n1 = std::string(toks[2]);
    el.n2 = std::string(toks[3]);
    validate_element(el, lineno);
    for (std::size_t k = 0; k < els.size(); ++k)
      if (els[k].name == el.name)
        throw Error(ErrorKind::Validation,
                    fmt::format("line {}: duplicate element name '{}' (first on line {})", lineno, el.name, lines[k]), lineno);
    els.push_back(std::move(el));
    lines.push_back(lineno);
  }
  return Netlist(std::move(els));
}

Netlist load_netlist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open netlist '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_netlist(ss.str());
}

std::string serialize(const Netlist& net) {
  std::string out;
  for (auto& el : net.elements()) {
    switch (el.kind) {
      case ElementKind::Capacitor:
        out += fmt::format("C {} {} {} {:.15g}\n", el.name, el.n1, el.n2, el.value / phys::fF);
        break;
      case ElementKind::Inductor:
        out += fmt::format("L {} {} {} {:.15g}\n", el.name, el.n1, el.n2, el.value / phys::nH);
        break;
      case ElementKind::Junction:
        out += fmt::format("JJ {} {} {} LJ={:.15g}", el.name, el.n1, el.n2, el.value / phys::nH);
        if (el.cj > 0) out += fmt::format(" CJ={:.15g}", el.cj / phys::fF);
        out += "\n";
        break;
      case ElementKind::Line:
        out += fmt::format("TL {} {} {} Z0={:.15g} LEN={:.15g}", el.name, el.n1, el.n2, el.value, el.length / phys::mm);
        if (el.eps_explicit || el.eps_eff != kDefaultEpsEff) out += fmt::format(" EEFF={:.15g}", el.eps_eff);
        out += "\n";
        break;
    }
  }
  return out;
}

Eigen::MatrixXd capacitive_reduction(const Netlist& net, bool lump_lines) {
  const int n = net.node_count();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> parent(n + 1);  // slot n is ground
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto stamp = [&](int a, int b, double c) {
    if (a >= 0) C(a, a) += c;
    if (b >= 0) C(b, b) += c;
    if (a >= 0 && b >= 0) {
      C(a, b) -= c;
      C(b, a) -= c;
    }
    parent[root(a < 0 ? n : a)] = root(b < 0 ? n : b);
  };
  for (auto& el : net.elements()) {
    int a = net.node_index(el.n1), b = net.node_index(el.n2);
    if (el.kind == ElementKind::Capacitor) {
      stamp(a, b, el.value);
    } else if (el.kind == ElementKind::Junction && el.cj > 0) {
      stamp(a, b, el.cj);
    } else if (el.kind == ElementKind::Line && lump_lines) {
      double cl = std::sqrt(el.eps_eff) * el.length / (el.value * phys::c0);
      stamp(a, -1, cl / 2);
      stamp(b, -1, cl / 2);
    }
  }

  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (root(i) == root(n)) keep.push_back(i);
  for (auto& p : net.ports())
    for (auto* nd : {&p.n1, &p.n2}) {
      int k = net.node_index(*nd);
      if (k >= 0 && root(k) != root(n))
        throw Error(ErrorKind::DegenerateReduction,
                    fmt::format("port {} node '{}' has no capacitive path to ground", p.junction, *nd));
    }

  const int m = static_cast<int>(keep.size());
  std::vector<int> slot(n, -1);
  for (int k = 0; k < m; ++k) slot[keep[k]] = k;
  Eigen::MatrixXd Cr(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) Cr(r, c) = C(keep[r], keep[c]);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, net.port_count());
  for (int k = 0; k < net.port_count(); ++k) {
    int a = net.node_index(net.ports()[k].n1), b = net.node_index(net.ports()[k].n2);
    if (a >= 0) B(slot[a], k) += 1.0;
    if (b >= 0) B(slot[b], k) -= 1.0;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(Cr);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::DegenerateReduction, "capacitance matrix not positive definite");
  Eigen::MatrixXd S = B.transpose() * llt.solve(B);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
  if (!lu.isInvertible()) throw Error(ErrorKind::DegenerateReduction, "qubit ports are not independent");
  Eigen::MatrixXd out = lu.inverse();
  return (out + out.transpose()) / 2;
}

}  // namespace zzi
