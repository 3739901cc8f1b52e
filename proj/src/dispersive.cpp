#include "zzi/dispersive.hpp"

#include <fmt/format.h>

#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "zzi/errors.hpp"

namespace zzi {

const char* to_string(MethodVariant v) {
  switch (v) {
    case MethodVariant::Naive: return "naive";
    case MethodVariant::ZMethod0: return "zm0";
    case MethodVariant::ZMethodK0: return "zmk0";
    case MethodVariant::ZMethod: return "zm";
  }
  return "?";
}

std::optional<MethodVariant> parse_variant(const std::string& s) {
  for (auto v : kAllVariants)
    if (s == to_string(v)) return v;
  return std::nullopt;
}

double anharmonicity(double E_C, double omega, double a) {
  const double ec = a * a * E_C;
  return -ec / (1.0 - 2.0 * ec / omega);
}

double alpha_ii(double omega, double L, double C, double im_z, double im_dz) {
  const double Zc = std::sqrt(L / C);
  return 0.5 - 0.75 * im_z / Zc - 0.25 * omega * im_dz / Zc;
}

namespace {

double safe_residual(const ImpedanceProvider& p, int port, double w, double LJ, double ec) {
  try {
    return p.impedance(w)(port, port).imag() + w * LJ / (1.0 - 2.0 * ec / w);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::PoleProximity || e.kind() == ErrorKind::StampSingularity ||
        e.kind() == ErrorKind::Extrapolation)
      return std::numeric_limits<double>::quiet_NaN();
    throw;
  }
}

double find_root(const ImpedanceProvider& p, int port, double LJ, double ec, double seed, const SolveOptions& opt) {
  double span = opt.bracket;
  for (int attempt = 0; attempt < 4; ++attempt, span *= 1.5) {
    const double lo = seed * std::max(0.05, 1.0 - span), hi = seed * (1.0 + span);
    const int n = opt.grid;
    std::vector<double> w(n + 1), f(n + 1);
    for (int k = 0; k <= n; ++k) {
      w[k] = lo + (hi - lo) * k / n;
      f[k] = safe_residual(p, port, w[k], LJ, ec);
    }
    double best = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < n; ++k) {
      // residual rises between poles: a -/+ crossing is a root, +/- a pole
      if (!(f[k] < 0 && f[k + 1] > 0)) continue;
      auto g = [&](double x) { return p.impedance(x)(port, port).imag() + x * LJ / (1.0 - 2.0 * ec / x); };
      std::uintmax_t it = 200;
      auto r = boost::math::tools::toms748_solve(g, w[k], w[k + 1], f[k], f[k + 1],
                                                 boost::math::tools::eps_tolerance<double>(52), it);
      double root = 0.5 * (r.first + r.second);
      if (std::abs(g(root)) > 1e-6 * root * LJ) continue;
      if (std::isnan(best) || std::abs(root - seed) < std::abs(best - seed)) best = root;
    }
    if (!std::isnan(best)) return best;
  }
  throw Error(ErrorKind::NoBracket,
              fmt::format("port {}: no resonance of Im Z + omega L near {:.6f} GHz", port + 1, phys::ghz(seed)));
}

}  // namespace

QubitParams solve_qubit(const ImpedanceProvider& p, int port, double L_J, double C, MethodVariant variant,
                        const SolveOptions& opt) {
  if (!(L_J > 0 && C > 0)) throw Error(ErrorKind::Validation, "solve_qubit needs L_J > 0 and C > 0");
  if (port < 0 || port >= p.port_count()) throw Error(ErrorKind::Validation, fmt::format("no port {}", port + 1));
  QubitParams q;
  q.port = port;
  q.corrected = corrected_delta(variant);
  q.L_J = L_J;
  q.C = C;
  q.E_C = opt.charging ? phys::charging_rate(C) : 0.0;
  q.omega_J = 1.0 / std::sqrt(L_J * C);

  double a = 1.0, w_prev = 0.0;
  for (int it = 1; it <= opt.max_iter; ++it) {
    const double ec = (q.corrected ? a * a : 1.0) * q.E_C;
    const double w = find_root(p, port, L_J, ec, q.omega_J - ec, opt);
    const double L = L_J / (1.0 - 2.0 * ec / w);
    const double a_new = alpha_ii(w, L, C, p.impedance(w)(port, port).imag(), p.derivative(w, port, port).imag());
    const bool done = !q.corrected || (it > 1 && std::abs(w - w_prev) < opt.tol);
    if (done) {
      q.omega = w;
      q.L = L;
      q.alpha_ii = q.corrected ? a : a_new;
      q.Z_char = std::sqrt(L / C);
      q.delta = q.corrected ? anharmonicity(q.E_C, w, a) : anharmonicity(q.E_C, w);
      q.iterations = it;
      return q;
    }
    w_prev = w;
    a = a_new;
  }
  throw Error(ErrorKind::NotConverged, fmt::format("port {}: alpha_ii iteration did not converge", port + 1));
}

double exchange_j(const QubitParams& qi, const QubitParams& qj, double xi, double xj) {
  const double wi = qi.omega, wj = qj.omega;
  return -0.25 * std::sqrt(wi * wj / (qi.L * qj.L)) * (xi / wi + xj / wj);
}

double exchange_j(const QubitParams& qi, const QubitParams& qj, const ImpedanceProvider& p) {
  return exchange_j(qi, qj, p.impedance(qi.omega)(qi.port, qj.port).imag(),
                    p.impedance(qj.omega)(qi.port, qj.port).imag());
}

Corrections coupling_corrections(const QubitParams& qi, const QubitParams& qj, double xi, double xj) {
  const double wi = qi.omega, wj = qj.omega;
  if (std::abs(wi - wj) < phys::two_pi * 1e3)
    throw Error(ErrorKind::Degenerate,
                fmt::format("qubits {} and {} within 1 kHz of each other", qi.port + 1, qj.port + 1));
  const double di = qi.delta, dj = qj.delta;
  Corrections c;
  // cross characteristic impedance with the effective capacitance 1/(w^2 L)
  const double zc_ji = wi * std::sqrt(qi.L * qj.L);
  const double zc_ij = wj * std::sqrt(qi.L * qj.L);
  c.alpha_ij = ((wi * wi - 2 * wj * wj) * xj + wi * wj * xi) / (zc_ji * 2 * (wj * wj - wi * wi));
  c.alpha_ji = ((wj * wj - 2 * wi * wi) * xi + wi * wj * xj) / (zc_ij * 2 * (wi * wi - wj * wj));

  const double D2 = wi * wi - wj * wj;
  c.a_di_i = 1 + 2 * wi * di / D2;
  c.a_di_j = 1 - 2 * wi * di / D2 + 4 * di / wi;
  c.a_dj_i = 1 + 2 * wj * dj / D2 + 4 * dj / wj;
  c.a_dj_j = 1 - 2 * wj * dj / D2;
  const double pref = -0.25 * std::sqrt(wi * wj / (qi.L * qj.L));
  c.J_delta_i = pref * (c.a_di_i * xi / wi + c.a_di_j * xj / wj);
  c.J_delta_j = pref * (c.a_dj_i * xi / wi + c.a_dj_j * xj / wj);

  const double J = exchange_j(qi, qj, xi, xj);
  c.J_delta_i_add = J + di * std::sqrt(wi / wj) * c.alpha_ij;
  c.J_delta_j_add = J + dj * std::sqrt(wj / wi) * c.alpha_ji;
  const double scale = std::max({std::abs(J), std::abs(c.J_delta_i), std::abs(c.J_delta_j), 1e-300});
  c.identity_residual =
      std::max(std::abs(c.J_delta_i - c.J_delta_i_add), std::abs(c.J_delta_j - c.J_delta_j_add)) / scale;
  if (c.identity_residual > 1e-9)
    throw std::logic_error(fmt::format("corrected coupling forms disagree by {:.3g}", c.identity_residual));
  return c;
}

Corrections coupling_corrections(const QubitParams& qi, const QubitParams& qj, const ImpedanceProvider& p) {
  return coupling_corrections(qi, qj, p.impedance(qi.omega)(qi.port, qj.port).imag(),
                              p.impedance(qj.omega)(qi.port, qj.port).imag());
}

double cross_kerr(const QubitParams& qi, const QubitParams& qj, const Corrections& c) {
  const double wi = qi.omega, wj = qj.omega;
  return 2 * qi.delta * (wi / wj) * c.alpha_ij * c.alpha_ij + 2 * qj.delta * (wj / wi) * c.alpha_ji * c.alpha_ji;
}

double zz_rate(const QubitParams& qi, const QubitParams& qj, const CouplingInputs& in, MethodVariant v) {
  const double di = qi.delta, dj = qj.delta, D = qi.omega - qj.omega;
  if (v == MethodVariant::Naive) return -2 * in.J * in.J * (di + dj) / ((D + di) * (dj - D));
  const double Ji = in.corr.J_delta_i, Jj = in.corr.J_delta_j;
  const double z = 2 * (Ji * Ji * (dj - D) + Jj * Jj * (di + D)) / ((D + di) * (D - dj));
  if (v == MethodVariant::ZMethod0) return z;
  return z + cross_kerr(qi, qj, in.corr);
}

CouplingReport couple(const QubitParams& qi, const QubitParams& qj, const ImpedanceProvider& p) {
  if (qi.port == qj.port) throw Error(ErrorKind::Validation, "coupling needs two distinct ports");
  const double xi = p.impedance(qi.omega)(qi.port, qj.port).imag();
  const double xj = p.impedance(qj.omega)(qi.port, qj.port).imag();
  CouplingReport r;
  r.i = qi.port;
  r.j = qj.port;
  r.J = exchange_j(qi, qj, xi, xj);
  r.Delta = qi.omega - qj.omega;
  r.corr = coupling_corrections(qi, qj, xi, xj);
  r.straddling = std::abs(r.Delta) < std::min(std::abs(qi.delta), std::abs(qj.delta));
  const double near = phys::two_pi * 1e4;
  if (std::abs(r.Delta + qi.delta) < near || std::abs(r.Delta - qj.delta) < near) r.warnings.push_back("near_pole");
  CouplingInputs in{r.J, r.corr};
  if (qi.corrected) {
    r.zz[MethodVariant::ZMethod] = zz_rate(qi, qj, in, MethodVariant::ZMethod);
  } else {
    for (auto v : {MethodVariant::Naive, MethodVariant::ZMethod0, MethodVariant::ZMethodK0})
      r.zz[v] = zz_rate(qi, qj, in, v);
  }
  return r;
}

DeviceReport analyze(const ImpedanceProvider& p, const std::vector<double>& C, const std::vector<double>& lj_base,
                     const std::vector<double>& lj_corrected, const SolveOptions& opt) {
  const int n = p.port_count();
  if (static_cast<int>(C.size()) != n || static_cast<int>(lj_base.size()) != n ||
      static_cast<int>(lj_corrected.size()) != n)
    throw Error(ErrorKind::Validation, fmt::format("expected {} capacitances and junction inductances", n));
  DeviceReport rep;
  for (int k = 0; k < n; ++k) {
    rep.base.push_back(solve_qubit(p, k, lj_base[k], C[k], MethodVariant::ZMethodK0, opt));
    rep.corrected.push_back(solve_qubit(p, k, lj_corrected[k], C[k], MethodVariant::ZMethod, opt));
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      DeviceReport::Pair pr{i, j, couple(rep.base[i], rep.base[j], p), couple(rep.corrected[i], rep.corrected[j], p), {}};
      pr.zz = pr.base.zz;
      pr.zz.insert(pr.corrected.zz.begin(), pr.corrected.zz.end());
      rep.pairs.push_back(std::move(pr));
    }
  return rep;
}

}  // namespace zzi
