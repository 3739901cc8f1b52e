#include "zzi/calibrate.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "zzi/errors.hpp"

namespace zzi {

double tune_junction(const ImpedanceProvider& p, int port, double C, double target, MethodVariant v,
                     const SolveOptions& opt, double tol) {
  if (!(target > 0 && C > 0)) throw Error(ErrorKind::Validation, "tuning needs a positive target and capacitance");
  auto f = [&](double L) { return solve_qubit(p, port, L, C, v, opt).omega - target; };
  double L0 = 1.0 / (target * target * C), L1 = 0.97 * L0;
  double f0 = f(L0), f1 = f(L1);
  for (int it = 0; it < 50; ++it) {
    if (std::abs(f1) < tol) return L1;
    const double slope = (f1 - f0) / (L1 - L0);
    if (!(slope < 0))
      throw Error(ErrorKind::NoBracket, fmt::format("port {}: qubit frequency not decreasing in L_J near {:.4f} nH",
                                                    port + 1, L1 / phys::nH));
    double L2 = L1 - f1 / slope;
    if (!(L2 > 0)) L2 = L1 / 2;
    L0 = L1;
    f0 = f1;
    L1 = L2;
    f1 = f(L1);
  }
  throw Error(ErrorKind::NotConverged, fmt::format("port {}: junction tuning did not converge", port + 1));
}

TunedJunctions tune_all(const ImpedanceProvider& p, const std::vector<double>& C, const std::vector<double>& targets,
                        const SolveOptions& opt) {
  if (C.size() != targets.size() || static_cast<int>(C.size()) != p.port_count())
    throw Error(ErrorKind::Validation, fmt::format("expected {} capacitances and targets", p.port_count()));
  TunedJunctions t;
  for (std::size_t k = 0; k < C.size(); ++k) {
    t.base.push_back(tune_junction(p, static_cast<int>(k), C[k], targets[k], MethodVariant::ZMethodK0, opt));
    t.corrected.push_back(tune_junction(p, static_cast<int>(k), C[k], targets[k], MethodVariant::ZMethod, opt));
  }
  return t;
}

OracleTuning oracle_tune(const Netlist& lumped, const std::vector<double>& targets, std::vector<double> lj,
                         const OracleOptions& opt, double tol, int max_iter) {
  if (targets.size() != 2 || lj.size() != 2 || lumped.port_count() != 2)
    throw Error(ErrorKind::Validation, "oracle tuning handles exactly two junctions");
  OracleTuning out;
  for (int it = 1; it <= max_iter; ++it) {
    out.model = linear_normal_modes(lumped.with_junctions(lj));
    out.result = diagonalize(out.model, opt.truncation, opt);
    out.iterations = it;
    out.lj = lj;
    const double e0 = out.result.omega10 - targets[0], e1 = out.result.omega01 - targets[1];
    if (std::abs(e0) < tol && std::abs(e1) < tol) {
      if (opt.convergence) {
        const OracleResult b = diagonalize(out.model, opt.truncation.bumped(), opt);
        out.result.convergence = std::abs(b.zz - out.result.zz);
        out.result.converged = out.result.convergence <= opt.tolerance;
      }
      return out;
    }
    lj[0] *= std::pow(out.result.omega10 / targets[0], 2);
    lj[1] *= std::pow(out.result.omega01 / targets[1], 2);
  }
  throw Error(ErrorKind::NotConverged, "oracle junction retuning did not converge");
}

const char* to_string(Method m) {
  return m == Method::Exact ? "exact" : to_string(variant_of(m));
}

std::optional<Method> parse_method(const std::string& s) {
  for (auto m : kAllMethods)
    if (s == to_string(m)) return m;
  return std::nullopt;
}

std::vector<double> SweepSpec::values() const {
  std::vector<double> v(points);
  for (int k = 0; k < points; ++k) v[k] = points == 1 ? start : start + (stop - start) * k / (points - 1);
  return v;
}

void SweepSpec::validate() const {
  if (points < 1) throw Error(ErrorKind::Validation, "sweep needs at least one point");
  if (points > 1 && !(start < stop)) throw Error(ErrorKind::Validation, "sweep needs start < stop");
  if (param == SweepParam::Qubit2Frequency && targets_hz.size() < 2)
    throw Error(ErrorKind::Validation, "qubit-2 sweep needs target frequencies");
  if (param == SweepParam::Element && element.empty())
    throw Error(ErrorKind::Validation, "element sweep needs an element name");
}

SweepRow evaluate_point(double param, const SweepSpec& spec, const Device& dev, const std::set<Method>& methods,
                        const SweepOptions& opt) {
  SweepRow row;
  row.param = param;
  try {
    const auto& p = *dev.provider;
    if (p.port_count() < 2) throw Error(ErrorKind::Validation, "sweep needs at least two qubit ports");
    std::vector<double> targets;
    for (double f : spec.targets_hz) targets.push_back(phys::two_pi * f);
    if (spec.param == SweepParam::Qubit2Frequency) targets[1] = phys::two_pi * param;

    if (!targets.empty()) {
      auto t = tune_all(p, dev.caps, targets, opt.solve);
      row.lj_base = t.base;
      row.lj_corrected = t.corrected;
    } else {
      auto lj = spec.fixed_lj;
      if (lj.empty() && dev.netlist) lj = dev.netlist->junction_inductances();
      if (static_cast<int>(lj.size()) != p.port_count())
        throw Error(ErrorKind::Validation, "need fixed junction inductances or target frequencies");
      row.lj_base = row.lj_corrected = lj;
    }
    const DeviceReport rep = analyze(p, dev.caps, row.lj_base, row.lj_corrected, opt.solve);
    const auto& pr = rep.pairs.front();
    row.J = pr.base.J;
    row.J_corrected = pr.corrected.J;
    row.omega1 = rep.corrected[0].omega;
    row.omega2 = rep.corrected[1].omega;
    for (auto m : methods)
      if (m != Method::Exact) row.zz[static_cast<int>(m)] = pr.zz.at(variant_of(m));
    row.straddling = pr.corrected.straddling;
    if (row.straddling) row.flags.push_back("straddling");
    for (auto* r : {&pr.base, &pr.corrected})
      for (auto& w : r->warnings)
        if (std::find(row.flags.begin(), row.flags.end(), w) == row.flags.end()) row.flags.push_back(w);

    if (methods.count(Method::Exact)) {
      if (!dev.netlist) {
        row.flags.push_back("exact_unavailable");
      } else {
        const Netlist lumped = discretize_lines(*dev.netlist, opt.omega_max, opt.max_modes);
        OracleResult r;
        if (!targets.empty()) {
          auto t = oracle_tune(lumped, {targets[0], targets[1]}, {row.lj_corrected[0], row.lj_corrected[1]}, opt.oracle);
          r = t.result;
          row.lj_oracle = t.lj;
        } else {
          r = oracle_zz(linear_normal_modes(lumped.with_junctions(row.lj_base)), opt.oracle);
          row.lj_oracle = row.lj_base;
        }
        row.zz[static_cast<int>(Method::Exact)] = r.zz;
        row.exact_convergence = opt.oracle.convergence ? r.convergence : NAN;
        if (!r.converged) row.flags.push_back("exact_unconverged");
      }
    }
  } catch (const Error& e) {
    row.ok = false;
    row.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
  }
  return row;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const DeviceFactory& factory, const std::set<Method>& methods,
                                const SweepOptions& opt) {
  spec.validate();
  const auto vals = spec.values();
  std::vector<SweepRow> rows(vals.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < vals.size(); k = next++) {
      try {
        rows[k] = evaluate_point(vals[k], spec, factory(vals[k]), methods, opt);
      } catch (const Error& e) {
        rows[k].param = vals[k];
        rows[k].ok = false;
        rows[k].error = fmt::format("{}: {}", to_string(e.kind()), e.what());
      }
    }
  };
  unsigned n = opt.threads > 0 ? static_cast<unsigned>(opt.threads) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(vals.size()));
  if (n <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(work);
  }
  return rows;
}

}  // namespace zzi
