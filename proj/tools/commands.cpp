#include "commands.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "zzi/calibrate.hpp"
#include "zzi/circuits.hpp"
#include "zzi/errors.hpp"
#include "zzi/fit.hpp"

namespace zzi::cli {
namespace {

using json = nlohmann::ordered_json;

double rounded(double x, int digits) { return std::stod(fmt::format("{:.{}f}", x, digits)); }
json num(double x, int digits) { return std::isfinite(x) ? json(rounded(x, digits)) : json(nullptr); }
json ghz(double w) { return num(phys::ghz(w), 6); }
json mhz(double w) { return num(phys::mhz(w), 4); }
json khz(double w) { return num(phys::khz(w), 3); }

std::string cell(double x, int digits) { return std::isfinite(x) ? fmt::format("{:.{}f}", x, digits) : ""; }

Error input(const std::string& msg) { return Error(ErrorKind::Validation, msg); }

struct DeviceArgs {
  std::string netlist, touchstone, ztable, preset;
  double fb = 7.0;    // GHz, bus preset
  double eeff = 0.0;  // 0 keeps the netlist's own values
  double zref = 50.0;
  std::vector<double> caps;  // fF
  bool lump_lines = false;
};

struct OracleArgs {
  int qubit_levels = Truncation{}.qubit_levels;
  int other_levels = Truncation{}.other_levels;
  int cap = Truncation{}.excitation_cap;
  std::string order = "full";
  int max_modes = 12;
  double tolerance_khz = 0.1;
};

void add_device_options(CLI::App* c, DeviceArgs& a) {
  c->add_option("--netlist", a.netlist, "circuit netlist file");
  c->add_option("--touchstone", a.touchstone, "Touchstone S-parameter file (ports across the junctions)");
  c->add_option("--ztable", a.ztable, "tabulated Z CSV");
  c->add_option("--preset", a.preset, "built-in circuit: bus, rational, cancel");
  c->add_option("--fb", a.fb, "bus resonance for the bus preset (GHz)");
  c->add_option("--eeff", a.eeff, "effective permittivity for lines without an explicit EEFF");
  c->add_option("--zref", a.zref, "Touchstone reference impedance (ohm)");
  c->add_option("--cap", a.caps, "qubit shunt capacitances (fF), overrides the capacitive reduction")->delimiter(',');
  c->add_flag("--lump-lines", a.lump_lines, "lump half of each line's capacitance at its ends in the reduction");
}

void add_oracle_options(CLI::App* c, OracleArgs& o) {
  c->add_option("--levels", o.qubit_levels, "oracle levels on qubit modes");
  c->add_option("--other-levels", o.other_levels, "oracle levels on the other modes");
  c->add_option("--excitations", o.cap, "cap on total excitations, 0 disables");
  c->add_option("--order", o.order, "cosine model: full, 4 or 6");
  c->add_option("--max-modes", o.max_modes, "mode budget for line discretization");
  c->add_option("--oracle-tol", o.tolerance_khz, "truncation-bump tolerance (kHz)");
}

OracleOptions oracle_options(const OracleArgs& a) {
  OracleOptions o;
  o.truncation = {a.qubit_levels, a.other_levels, a.cap};
  if (a.order == "full")
    o.cosine = CosineModel::Full;
  else if (a.order == "4")
    o.cosine = CosineModel::Order4;
  else if (a.order == "6")
    o.cosine = CosineModel::Order6;
  else
    throw input(fmt::format("unknown cosine order '{}'", a.order));
  o.tolerance = phys::two_pi * a.tolerance_khz * 1e3;
  return o;
}

Device build_device(const DeviceArgs& a, double fb_hz) {
  const int sources = !a.netlist.empty() + !a.touchstone.empty() + !a.ztable.empty() + !a.preset.empty();
  if (sources != 1) throw input("give exactly one of --netlist, --touchstone, --ztable, --preset");
  std::vector<double> caps;
  for (double c : a.caps) {
    if (!(c > 0)) throw input("capacitances must be positive");
    caps.push_back(c * phys::fF);
  }
  Device d;
  std::optional<Netlist> net;
  if (a.preset == "bus") {
    net = bus_netlist(fb_hz);
  } else if (a.preset == "cancel") {
    net = cancel_coupler_netlist(a.eeff > 0 ? a.eeff : kCancelEpsEff);
  } else if (a.preset == "rational") {
    auto r = two_zero_rational();
    d.provider = r;
    d.caps = {r->c1(), r->c2()};
  } else if (!a.preset.empty()) {
    throw input(fmt::format("unknown preset '{}'", a.preset));
  } else if (!a.netlist.empty()) {
    net = load_netlist(a.netlist);
    if (a.eeff > 0) net = net->with_default_eps(a.eeff);
  } else {
    if (caps.empty()) throw input("--cap is required with tabulated impedance input");
    const std::string text = read_file(a.touchstone.empty() ? a.ztable : a.touchstone);
    if (!a.touchstone.empty())
      d.provider = read_touchstone(text, a.zref, 0, caps);
    else
      d.provider = read_zcsv(text, caps);
  }
  if (net) {
    d.provider = std::make_shared<NodalCircuit>(*net);
    const Eigen::MatrixXd C = capacitive_reduction(*net, a.lump_lines);
    for (int k = 0; k < C.rows(); ++k) d.caps.push_back(C(k, k));
    d.netlist = std::move(net);
  }
  if (!caps.empty()) d.caps = caps;
  if (static_cast<int>(d.caps.size()) != d.provider->port_count())
    throw input(fmt::format("device has {} qubit ports but {} capacitances", d.provider->port_count(), d.caps.size()));
  return d;
}

std::set<Method> parse_methods(const std::string& s) {
  std::set<Method> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto m = parse_method(tok);
    if (!m) throw input(fmt::format("unknown method '{}'", tok));
    out.insert(*m);
  }
  if (out.empty()) throw input("no methods selected");
  return out;
}

std::vector<double> to_si(const std::vector<double>& v, double unit) {
  std::vector<double> out;
  for (double x : v) out.push_back(x * unit);
  return out;
}

std::vector<double> junctions(const std::vector<double>& lj_nh, const Device& d) {
  if (!lj_nh.empty()) return to_si(lj_nh, phys::nH);
  if (d.netlist) return d.netlist->junction_inductances();
  throw input("give --targets or --lj for this device");
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw Error(ErrorKind::Io, fmt::format("cannot write {}", path));
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

json qubit_json(const QubitParams& q) {
  json j;
  j["f_ghz"] = ghz(q.omega);
  j["lj_nh"] = num(q.L_J / phys::nH, 4);
  j["l_nh"] = num(q.L / phys::nH, 4);
  j["delta_mhz"] = mhz(q.delta);
  j["alpha_ii"] = num(q.alpha_ii, 6);
  j["z_char_ohm"] = num(q.Z_char, 3);
  j["iterations"] = q.iterations;
  return j;
}

json coupling_json(const CouplingReport& r) {
  json j;
  j["j_mhz"] = mhz(r.J);
  j["detuning_ghz"] = ghz(r.Delta);
  j["alpha_ij"] = num(r.corr.alpha_ij, 6);
  j["alpha_ji"] = num(r.corr.alpha_ji, 6);
  j["factors"] = {num(r.corr.a_di_i, 6), num(r.corr.a_di_j, 6), num(r.corr.a_dj_i, 6), num(r.corr.a_dj_j, 6)};
  j["j_delta_i_mhz"] = mhz(r.corr.J_delta_i);
  j["j_delta_j_mhz"] = mhz(r.corr.J_delta_j);
  j["straddling"] = r.straddling;
  j["warnings"] = r.warnings;
  return j;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  DeviceArgs dev;
  OracleArgs oracle;
  std::vector<double> targets, lj;
  std::string methods = "naive,zm0,zmk0,zm";
  std::string format = "json", out;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& os) {
  const Device d = build_device(a.dev, a.dev.fb * 1e9);
  const auto methods = parse_methods(a.methods);
  const auto& p = *d.provider;
  std::vector<double> lj_b, lj_c;
  if (!a.targets.empty()) {
    if (static_cast<int>(a.targets.size()) != p.port_count())
      throw input(fmt::format("expected {} target frequencies", p.port_count()));
    auto t = tune_all(p, d.caps, to_si(a.targets, phys::two_pi * 1e9));
    lj_b = t.base;
    lj_c = t.corrected;
  } else {
    lj_b = lj_c = junctions(a.lj, d);
  }
  const DeviceReport rep = analyze(p, d.caps, lj_b, lj_c);

  std::optional<OracleResult> exact;
  std::vector<double> lj_exact;
  if (methods.count(Method::Exact)) {
    if (!d.netlist) throw input("the exact method needs a netlist");
    if (p.port_count() != 2) throw input("the exact method handles two qubits");
    const OracleOptions oo = oracle_options(a.oracle);
    const Netlist lumped = discretize_lines(*d.netlist, phys::two_pi * 10e9, a.oracle.max_modes);
    if (!a.targets.empty()) {
      auto t = oracle_tune(lumped, to_si(a.targets, phys::two_pi * 1e9), lj_c, oo);
      exact = t.result;
      lj_exact = t.lj;
    } else {
      exact = oracle_zz(linear_normal_modes(lumped.with_junctions(lj_b)), oo);
      lj_exact = lj_b;
    }
  }

  Output out(a.out, os);
  if (a.format == "csv") {
    *out << "i,j,j_mhz,zz_naive_khz,zz_zm0_khz,zz_zmk0_khz,zz_zm_khz,zz_exact_khz,flags\n";
    for (auto& pr : rep.pairs) {
      std::vector<std::string> flags = pr.corrected.warnings;
      if (pr.corrected.straddling) flags.insert(flags.begin(), "straddling");
      *out << fmt::format("{},{},{}", pr.i + 1, pr.j + 1, cell(phys::mhz(pr.base.J), 4));
      for (auto v : kAllVariants) {
        const bool want = methods.count(static_cast<Method>(static_cast<int>(v)));
        *out << "," << (want ? cell(phys::khz(pr.zz.at(v)), 3) : "");
      }
      *out << "," << (exact ? cell(phys::khz(exact->zz), 3) : "") << "," << fmt::format("{}", fmt::join(flags, ";"))
           << "\n";
    }
    return 0;
  }
  if (a.format != "json") throw input(fmt::format("unknown format '{}'", a.format));
  json j;
  j["provider"] = p.describe();
  j["qubits"] = json::array();
  for (int k = 0; k < p.port_count(); ++k) {
    json q;
    q["port"] = k + 1;
    q["c_ff"] = num(d.caps[k] / phys::fF, 3);
    q["ec_mhz"] = mhz(rep.base[k].E_C);
    q["base"] = qubit_json(rep.base[k]);
    q["corrected"] = qubit_json(rep.corrected[k]);
    j["qubits"].push_back(q);
  }
  j["pairs"] = json::array();
  for (auto& pr : rep.pairs) {
    json x;
    x["i"] = pr.i + 1;
    x["j"] = pr.j + 1;
    x["base"] = coupling_json(pr.base);
    x["corrected"] = coupling_json(pr.corrected);
    json zz;
    for (auto v : kAllVariants)
      if (methods.count(static_cast<Method>(static_cast<int>(v)))) zz[to_string(v)] = khz(pr.zz.at(v));
    if (exact && pr.i == 0 && pr.j == 1) zz["exact"] = khz(exact->zz);
    x["zz_khz"] = zz;
    j["pairs"].push_back(x);
  }
  if (exact) {
    json e;
    e["convergence_khz"] = khz(exact->convergence);
    e["converged"] = exact->converged;
    e["lj_nh"] = json::array();
    for (double l : lj_exact) e["lj_nh"].push_back(num(l / phys::nH, 4));
    e["f10_ghz"] = ghz(exact->omega10);
    e["f01_ghz"] = ghz(exact->omega01);
    j["exact"] = e;
  }
  *out << j.dump(2) << "\n";
  return 0;
}

// ---- sweep / compare -----------------------------------------------------------

struct SweepArgs {
  DeviceArgs dev;
  OracleArgs oracle;
  std::string param = "fb", element;
  double start = 0, stop = 0;
  int points = 50;
  std::vector<double> targets, lj;
  std::string methods = "naive,zm0,zmk0,zm";
  int threads = 0;
  std::string plot, format = "csv", out;
};

struct Column {
  std::string name;
  std::function<std::string(const SweepRow&)> value;
};

std::string row_flags(const SweepRow& r) {
  std::vector<std::string> f = r.flags;
  if (!r.ok) f.push_back("error=" + r.error);
  return fmt::format("{}", fmt::join(f, ";"));
}

Column zz_column(Method m) {
  return {fmt::format("zz_{}_khz", to_string(m)), [m](const SweepRow& r) { return cell(phys::khz(r.zz_of(m)), 3); }};
}

// returns the param column printer
std::function<std::string(double)> apply_sweep_defaults(SweepArgs& a, SweepSpec& spec) {
  if (a.plot == "fig3" || a.plot == "fig4") {
    a.dev = {};
    a.dev.preset = "bus";
    a.param = "fb";
    a.start = 5.6;
    a.stop = 9.0;
    a.points = 50;
    a.targets = {5.0, 5.2};
    a.methods = a.plot == "fig3" ? "naive,zm0,exact" : "zmk0,zm,exact";
  } else if (a.plot == "fig5") {
    a.dev = {};
    a.dev.preset = "rational";
    a.param = "q2";
    a.start = 4.75;
    a.stop = 5.30;
    a.points = 56;
    a.targets = {5.0, 5.0};
    a.methods = "naive,zm0,zmk0,zm";
  } else if (a.plot == "fig7") {
    const double eeff = a.dev.eeff;
    a.dev = {};
    a.dev.preset = "cancel";
    a.dev.eeff = eeff;
    a.param = "q2";
    a.start = 4.70;
    a.stop = 5.30;
    a.points = 61;
    a.targets = {5.0, 5.0};
    a.methods = "zmk0,zm";
  } else if (!a.plot.empty()) {
    throw input(fmt::format("unknown plot '{}' (fig3, fig4, fig5, fig7)", a.plot));
  }
  if (a.param == "fb") {
    spec.param = SweepParam::BusFrequency;
  } else if (a.param == "q2") {
    spec.param = SweepParam::Qubit2Frequency;
  } else if (a.param == "element") {
    spec.param = SweepParam::Element;
    spec.element = a.element;
  } else {
    throw input(fmt::format("unknown sweep parameter '{}' (fb, q2, element)", a.param));
  }
  const bool freq = spec.param != SweepParam::Element;
  spec.start = freq ? a.start * 1e9 : a.start;
  spec.stop = freq ? a.stop * 1e9 : a.stop;
  spec.points = a.points;
  spec.targets_hz = to_si(a.targets, 1e9);
  spec.fixed_lj = to_si(a.lj, phys::nH);
  spec.validate();
  if (freq) return [](double v) { return cell(v / 1e9, 6); };
  return [](double v) { return fmt::format("{:.6g}", v); };
}

DeviceFactory make_factory(const SweepArgs& a, const SweepSpec& spec) {
  if (spec.param == SweepParam::BusFrequency) {
    if (a.dev.preset != "bus") throw input("the fb sweep needs --preset bus");
    return [dev = a.dev](double fb) { return build_device(dev, fb); };
  }
  const Device base = build_device(a.dev, a.dev.fb * 1e9);
  if (spec.param == SweepParam::Qubit2Frequency) return [base](double) { return base; };
  if (!base.netlist) throw input("element sweeps need a netlist");
  const Element* el = base.netlist->find(spec.element);
  if (!el) throw input(fmt::format("no element named '{}'", spec.element));
  double unit = phys::mm;  // C in fF, L and JJ in nH, TL length in mm
  if (el->kind == ElementKind::Capacitor) unit = phys::fF;
  if (el->kind == ElementKind::Inductor || el->kind == ElementKind::Junction) unit = phys::nH;
  return [base, name = spec.element, unit, caps = a.dev.caps, lump = a.dev.lump_lines](double v) {
    Device d;
    Netlist net = base.netlist->with_value(name, v * unit);
    d.provider = std::make_shared<NodalCircuit>(net);
    if (caps.empty()) {
      const Eigen::MatrixXd C = capacitive_reduction(net, lump);
      for (int k = 0; k < C.rows(); ++k) d.caps.push_back(C(k, k));
    } else {
      d.caps = base.caps;
    }
    d.netlist = std::move(net);
    return d;
  };
}

std::vector<SweepRow> run(SweepArgs& a, std::function<std::string(double)>& param_cell, std::set<Method>& methods) {
  SweepSpec spec;
  param_cell = apply_sweep_defaults(a, spec);
  methods = parse_methods(a.methods);
  SweepOptions opt;
  opt.threads = a.threads;
  opt.oracle = oracle_options(a.oracle);
  opt.max_modes = a.oracle.max_modes;
  return run_sweep(spec, make_factory(a, spec), methods, opt);
}

json row_json(const SweepRow& r, const std::set<Method>& methods, bool freq) {
  json j;
  j["param"] = freq ? num(r.param / 1e9, 6) : json(r.param);
  j["ok"] = r.ok;
  if (!r.ok) j["error"] = r.error;
  j["j_mhz"] = mhz(r.J);
  j["f1_ghz"] = ghz(r.omega1);
  j["f2_ghz"] = ghz(r.omega2);
  json zz;
  for (auto m : methods) zz[to_string(m)] = khz(r.zz_of(m));
  j["zz_khz"] = zz;
  if (methods.count(Method::Exact)) j["exact_convergence_khz"] = khz(r.exact_convergence);
  j["flags"] = r.flags;
  return j;
}

int cmd_sweep(SweepArgs a, std::ostream& os) {
  std::function<std::string(double)> pcell;
  std::set<Method> methods;
  const auto rows = run(a, pcell, methods);
  Output out(a.out, os);
  const bool freq = a.param != "element";
  if (a.format == "json") {
    json j = json::array();
    for (auto& r : rows) j.push_back(row_json(r, methods, freq));
    *out << j.dump(2) << "\n";
    return 0;
  }
  if (a.format != "csv") throw input(fmt::format("unknown format '{}'", a.format));

  std::vector<Column> cols;
  const std::string pname = a.plot.empty() ? "param" : (a.param == "fb" ? "fb_ghz" : "f2_ghz");
  cols.push_back({pname, [&](const SweepRow& r) { return pcell(r.param); }});
  cols.push_back({"j_mhz", [](const SweepRow& r) { return cell(phys::mhz(r.J), 4); }});
  if (a.plot.empty()) {
    for (auto m : kAllMethods) {
      Column c = zz_column(m);
      if (!methods.count(m)) c.value = [](const SweepRow&) { return std::string(); };
      cols.push_back(c);
    }
  } else {
    for (auto m : kAllMethods)
      if (methods.count(m)) cols.push_back(zz_column(m));
    if (methods.count(Method::Exact))
      cols.push_back({"exact_conv_khz", [](const SweepRow& r) { return cell(phys::khz(r.exact_convergence), 3); }});
    if (a.plot == "fig5" || a.plot == "fig7")
      cols.push_back({"straddling", [](const SweepRow& r) { return std::string(r.straddling ? "1" : "0"); }});
  }
  cols.push_back({"flags", row_flags});

  for (std::size_t k = 0; k < cols.size(); ++k) *out << (k ? "," : "") << cols[k].name;
  *out << "\n";
  for (auto& r : rows) {
    for (std::size_t k = 0; k < cols.size(); ++k) *out << (k ? "," : "") << cols[k].value(r);
    *out << "\n";
  }
  return 0;
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_compare(SweepArgs a, std::ostream& os) {
  a.methods = "naive,zm0,zmk0,zm,exact";
  std::function<std::string(double)> pcell;
  std::set<Method> methods;
  const auto rows = run(a, pcell, methods);
  std::map<Method, std::vector<double>> err;
  for (auto& r : rows)
    for (auto m : kAllMethods)
      if (m != Method::Exact && r.ok) {
        const double e = std::abs(r.zz_of(m) - r.zz_of(Method::Exact));
        if (std::isfinite(e)) err[m].push_back(e);
      }
  Output out(a.out, os);
  if (a.format == "json") {
    json j;
    json med;
    for (auto& [m, v] : err) med[to_string(m)] = khz(median(v));
    j["median_abs_error_khz"] = med;
    j["rows"] = json::array();
    for (auto& r : rows) j["rows"].push_back(row_json(r, methods, a.param != "element"));
    *out << j.dump(2) << "\n";
    return 0;
  }
  *out << "param,zz_exact_khz,exact_conv_khz,err_naive_khz,err_zm0_khz,err_zmk0_khz,err_zm_khz,flags\n";
  for (auto& r : rows) {
    *out << pcell(r.param) << "," << cell(phys::khz(r.zz_of(Method::Exact)), 3) << ","
         << cell(phys::khz(r.exact_convergence), 3);
    for (auto m : {Method::Naive, Method::ZMethod0, Method::ZMethodK0, Method::ZMethod})
      *out << "," << cell(phys::khz(std::abs(r.zz_of(m) - r.zz_of(Method::Exact))), 3);
    *out << "," << row_flags(r) << "\n";
  }
  *out << "median";
  *out << ",,";
  for (auto m : {Method::Naive, Method::ZMethod0, Method::ZMethodK0, Method::ZMethod})
    *out << "," << cell(phys::khz(median(err[m])), 3);
  *out << ",\n";
  return 0;
}

// ---- oracle / calibrate ---------------------------------------------------------

struct OracleCmdArgs {
  DeviceArgs dev;
  OracleArgs oracle;
  std::vector<double> targets, lj;
  std::string out;
};

int cmd_oracle(const OracleCmdArgs& a, std::ostream& os) {
  const Device d = build_device(a.dev, a.dev.fb * 1e9);
  if (!d.netlist) throw input("the oracle needs a netlist");
  const OracleOptions oo = oracle_options(a.oracle);
  const Netlist lumped = discretize_lines(*d.netlist, phys::two_pi * 10e9, a.oracle.max_modes);
  OracleResult r;
  HamiltonianModel model;
  std::vector<double> lj;
  int iterations = 0;
  if (!a.targets.empty()) {
    if (a.targets.size() != 2) throw input("the oracle tunes exactly two qubits");
    const auto targets = to_si(a.targets, phys::two_pi * 1e9);
    auto seed = tune_all(*d.provider, d.caps, targets).corrected;
    auto t = oracle_tune(lumped, targets, seed, oo);
    r = t.result;
    model = t.model;
    lj = t.lj;
    iterations = t.iterations;
  } else {
    lj = junctions(a.lj, d);
    model = linear_normal_modes(lumped.with_junctions(lj));
    r = oracle_zz(model, oo);
  }
  json j;
  j["zz_khz"] = khz(r.zz);
  j["f10_ghz"] = ghz(r.omega10);
  j["f01_ghz"] = ghz(r.omega01);
  j["anharmonicity_mhz"] = {mhz(r.anharm1), mhz(r.anharm2)};
  j["convergence_khz"] = khz(r.convergence);
  j["converged"] = r.converged;
  j["min_overlap"] = num(r.min_overlap, 6);
  j["dimension"] = r.dimension;
  j["cosine"] = to_string(oo.cosine);
  j["modes_ghz"] = json::array();
  for (double w : model.mode_freqs) j["modes_ghz"].push_back(ghz(w));
  j["lj_nh"] = json::array();
  for (double l : lj) j["lj_nh"].push_back(num(l / phys::nH, 4));
  if (iterations) j["tuning_iterations"] = iterations;
  Output out(a.out, os);
  *out << j.dump(2) << "\n";
  return r.converged ? 0 : 1;
}

struct CalibrateArgs {
  DeviceArgs dev;
  OracleArgs oracle;
  std::vector<double> targets;
  bool with_oracle = false;
  std::string out;
};

int cmd_calibrate(const CalibrateArgs& a, std::ostream& os) {
  const Device d = build_device(a.dev, a.dev.fb * 1e9);
  const auto& p = *d.provider;
  if (static_cast<int>(a.targets.size()) != p.port_count())
    throw input(fmt::format("expected {} target frequencies", p.port_count()));
  const auto targets = to_si(a.targets, phys::two_pi * 1e9);
  const auto t = tune_all(p, d.caps, targets);
  std::vector<double> lj_exact;
  if (a.with_oracle) {
    if (!d.netlist || p.port_count() != 2) throw input("oracle calibration needs a two-qubit netlist");
    const Netlist lumped = discretize_lines(*d.netlist, phys::two_pi * 10e9, a.oracle.max_modes);
    lj_exact = oracle_tune(lumped, targets, t.corrected, oracle_options(a.oracle)).lj;
  }
  json j = json::array();
  for (int k = 0; k < p.port_count(); ++k) {
    json q;
    q["port"] = k + 1;
    q["target_ghz"] = ghz(targets[k]);
    q["lj_base_nh"] = num(t.base[k] / phys::nH, 4);
    q["lj_corrected_nh"] = num(t.corrected[k] / phys::nH, 4);
    if (!lj_exact.empty()) q["lj_exact_nh"] = num(lj_exact[k] / phys::nH, 4);
    j.push_back(q);
  }
  Output out(a.out, os);
  *out << j.dump(2) << "\n";
  return 0;
}

// ---- fit ------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::vector<double> caps;
  double zref = 50.0;
  std::string format = "text", out;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t\r"));
    tok.erase(tok.find_last_not_of(" \t\r") + 1);
    out.push_back(tok);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, int line, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Syntax, fmt::format("bad {} '{}'", what, s), line);
}

bool is_touchstone_path(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext.size() == 4 && ext[1] == 's' && ext[3] == 'p';
}

int cmd_fit(const FitArgs& a, std::ostream& os) {
  std::istringstream in(read_file(a.data));
  std::string line;
  int lineno = 0;
  std::map<std::string, int> col;
  std::vector<double> measured, predicted;
  std::map<std::string, ProviderPtr> tables;
  const auto base_dir = std::filesystem::path(a.data).parent_path();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto f = split_csv(line);
    if (col.empty()) {
      for (int k = 0; k < static_cast<int>(f.size()); ++k) col[f[k]] = k;
      if (!col.count("measured_zz_khz")) throw Error(ErrorKind::Syntax, "header lacks measured_zz_khz", lineno);
      const bool direct = col.count("predicted_zz_khz");
      if (!direct && !(col.count("f1_ghz") && col.count("f2_ghz") && col.count("zfile")))
        throw Error(ErrorKind::Syntax, "header needs predicted_zz_khz or f1_ghz,f2_ghz,zfile", lineno);
      continue;
    }
    if (f.size() != col.size())
      throw Error(ErrorKind::Syntax, fmt::format("expected {} fields, got {}", col.size(), f.size()), lineno);
    measured.push_back(parse_number(f[col["measured_zz_khz"]], lineno, "measured_zz_khz"));
    if (col.count("predicted_zz_khz")) {
      predicted.push_back(parse_number(f[col["predicted_zz_khz"]], lineno, "predicted_zz_khz"));
      continue;
    }
    if (a.caps.size() != 2) throw input("--cap with two capacitances is required to predict from impedance files");
    const double f1 = parse_number(f[col["f1_ghz"]], lineno, "f1_ghz");
    const double f2 = parse_number(f[col["f2_ghz"]], lineno, "f2_ghz");
    if (!(f1 > 0 && f2 > 0)) throw Error(ErrorKind::Validation, "qubit frequencies must be positive", lineno);
    const std::string path = (base_dir / f[col["zfile"]]).string();
    auto& prov = tables[path];
    if (!prov) {
      const auto caps = to_si(a.caps, phys::fF);
      prov = is_touchstone_path(path) ? ProviderPtr(read_touchstone(read_file(path), a.zref, 2, caps))
                                      : ProviderPtr(read_zcsv(read_file(path), caps));
    }
    const auto caps = to_si(a.caps, phys::fF);
    const std::vector<double> targets{phys::two_pi * f1 * 1e9, phys::two_pi * f2 * 1e9};
    std::vector<double> lj;
    for (int k = 0; k < 2; ++k) lj.push_back(tune_junction(*prov, k, caps[k], targets[k], MethodVariant::ZMethod));
    const auto rep = analyze(*prov, caps, lj, lj);
    predicted.push_back(phys::khz(rep.pairs.front().zz.at(MethodVariant::ZMethod)));
  }
  const LinearFit fit = fit_linear(measured, predicted);
  Output out(a.out, os);
  if (a.format == "json") {
    json j;
    j["n"] = fit.n;
    j["slope"] = num(fit.slope, 6);
    j["intercept_khz"] = num(fit.intercept, 3);
    j["sigma_khz"] = num(fit.sigma, 3);
    j["summary"] = describe(fit);
    j["points"] = json::array();
    for (std::size_t k = 0; k < measured.size(); ++k) j["points"].push_back({num(measured[k], 3), num(predicted[k], 3)});
    *out << j.dump(2) << "\n";
  } else {
    *out << describe(fit) << "\n";
  }
  return 0;
}

// ---- export-z -------------------------------------------------------------------

struct ExportArgs {
  DeviceArgs dev;
  double fmin = 4.0, fmax = 8.0;
  int points = 401;
  std::string format = "zcsv", out;
};

int cmd_export(const ExportArgs& a, std::ostream& os) {
  const Device d = build_device(a.dev, a.dev.fb * 1e9);
  if (!(a.fmin > 0 && a.fmin < a.fmax) || a.points < 2) throw input("need 0 < fmin < fmax and at least 2 points");
  std::vector<double> f(a.points);
  for (int k = 0; k < a.points; ++k) f[k] = 1e9 * (a.fmin + (a.fmax - a.fmin) * k / (a.points - 1));
  Output out(a.out, os);
  if (a.format == "zcsv")
    *out << write_zcsv(*d.provider, f);
  else if (a.format == "touchstone")
    *out << write_touchstone(*d.provider, f, a.dev.zref);
  else
    throw input(fmt::format("unknown format '{}'", a.format));
  return 0;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& msg, int line = 0) {
  json j;
  j["error"]["kind"] = kind;
  j["error"]["message"] = msg;
  if (line > 0) j["error"]["line"] = line;
  err << j.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ZZ and exchange-coupling estimates from multiport impedance", "zzi"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* c_an = app.add_subcommand("analyze", "qubit parameters and pairwise couplings");
  add_device_options(c_an, an.dev);
  add_oracle_options(c_an, an.oracle);
  c_an->add_option("--targets", an.targets, "qubit frequencies to tune to (GHz)")->delimiter(',');
  c_an->add_option("--lj", an.lj, "fixed junction inductances (nH)")->delimiter(',');
  c_an->add_option("--methods", an.methods, "comma list of naive, zm0, zmk0, zm, exact");
  c_an->add_option("--format", an.format, "json or csv");
  c_an->add_option("--out", an.out, "output file");

  SweepArgs sw;
  auto* c_sw = app.add_subcommand("sweep", "one-parameter sweep");
  auto* c_cmp = app.add_subcommand("compare", "dispersive estimates against the oracle along a sweep");
  for (auto* c : {c_sw, c_cmp}) {
    add_device_options(c, sw.dev);
    add_oracle_options(c, sw.oracle);
    c->add_option("--param", sw.param, "fb, q2 or element");
    c->add_option("--element", sw.element, "element name for element sweeps");
    c->add_option("--start", sw.start, "GHz for fb/q2; fF, nH or mm (line length) for elements");
    c->add_option("--stop", sw.stop, "GHz for fb/q2; fF, nH or mm (line length) for elements");
    c->add_option("--points", sw.points, "number of points");
    c->add_option("--targets", sw.targets, "qubit frequencies (GHz); q2 sweeps replace the second")->delimiter(',');
    c->add_option("--lj", sw.lj, "fixed junction inductances (nH) when no targets")->delimiter(',');
    c->add_option("--threads", sw.threads, "worker threads, 0 = all cores");
    c->add_option("--format", sw.format, "csv or json");
    c->add_option("--out", sw.out, "output file");
  }
  c_sw->add_option("--methods", sw.methods, "comma list of naive, zm0, zmk0, zm, exact");
  c_sw->add_option("--plot-data", sw.plot, "fig3, fig4, fig5 or fig7: fixed setup and columns");

  OracleCmdArgs orc;
  auto* c_or = app.add_subcommand("oracle", "exact ZZ by diagonalizing the circuit Hamiltonian");
  add_device_options(c_or, orc.dev);
  add_oracle_options(c_or, orc.oracle);
  c_or->add_option("--targets", orc.targets, "retune the junctions to these dressed frequencies (GHz)")->delimiter(',');
  c_or->add_option("--lj", orc.lj, "fixed junction inductances (nH)")->delimiter(',');
  c_or->add_option("--out", orc.out, "output file");

  CalibrateArgs cal;
  auto* c_cal = app.add_subcommand("calibrate", "junction inductances for target qubit frequencies");
  add_device_options(c_cal, cal.dev);
  add_oracle_options(c_cal, cal.oracle);
  c_cal->add_option("--targets", cal.targets, "qubit frequencies (GHz)")->delimiter(',')->required();
  c_cal->add_flag("--oracle", cal.with_oracle, "also retune against the oracle");
  c_cal->add_option("--out", cal.out, "output file");

  FitArgs ft;
  auto* c_fit = app.add_subcommand("fit", "least-squares fit of predicted against measured ZZ");
  c_fit->add_option("--data", ft.data, "CSV: pair,measured_zz_khz,f1_ghz,f2_ghz,zfile")->required();
  c_fit->add_option("--cap", ft.caps, "qubit shunt capacitances (fF)")->delimiter(',');
  c_fit->add_option("--zref", ft.zref, "Touchstone reference impedance (ohm)");
  c_fit->add_option("--format", ft.format, "text or json");
  c_fit->add_option("--out", ft.out, "output file");

  ExportArgs ex;
  auto* c_ex = app.add_subcommand("export-z", "tabulate the impedance matrix");
  add_device_options(c_ex, ex.dev);
  c_ex->add_option("--fmin", ex.fmin, "GHz");
  c_ex->add_option("--fmax", ex.fmax, "GHz");
  c_ex->add_option("--points", ex.points, "grid points");
  c_ex->add_option("--format", ex.format, "zcsv or touchstone");
  c_ex->add_option("--out", ex.out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    print_error(err, "usage", e.what());
    return 2;
  }

  try {
    if (c_an->parsed()) return cmd_analyze(an, out);
    if (c_sw->parsed()) return cmd_sweep(sw, out);
    if (c_cmp->parsed()) return cmd_compare(sw, out);
    if (c_or->parsed()) return cmd_oracle(orc, out);
    if (c_cal->parsed()) return cmd_calibrate(cal, out);
    if (c_fit->parsed()) return cmd_fit(ft, out);
    if (c_ex->parsed()) return cmd_export(ex, out);
  } catch (const Error& e) {
    print_error(err, to_string(e.kind()), e.what(), e.line());
    return e.is_input() ? 2 : 1;
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
  return 2;
}

}  // namespace zzi::cli
