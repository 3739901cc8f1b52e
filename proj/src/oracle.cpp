#include "zzi/oracle.hpp"

#include <fmt/format.h>

#include <lapacke.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "zzi/errors.hpp"

namespace zzi {

const char* to_string(CosineModel m) {
  switch (m) {
    case CosineModel::Full: return "full";
    case CosineModel::Order4: return "4";
    case CosineModel::Order6: return "6";
  }
  return "?";
}

int default_segments(const Element& line, double omega_max) {
  // ladder cutoff is 2n/tau; keep it above 10 omega_max
  const double tau = std::sqrt(line.eps_eff) * line.length / phys::c0;
  return std::max(1, static_cast<int>(std::ceil(5.0 * omega_max * tau)));
}

Netlist discretize_lines(const Netlist& net, int segments_per_line) {
  if (segments_per_line < 1) throw Error(ErrorKind::Validation, "segments per line must be >= 1");
  std::vector<Element> out;
  for (auto& el : net.elements()) {
    if (el.kind != ElementKind::Line) {
      out.push_back(el);
      continue;
    }
    const int n = segments_per_line;
    const double tau = std::sqrt(el.eps_eff) * el.length / phys::c0;
    const double Ls = el.value * tau / n, Cs = tau / (el.value * n);
    std::vector<std::string> nodes{el.n1};
    for (int k = 1; k < n; ++k) nodes.push_back(fmt::format("{}.{}", el.name, k));
    nodes.push_back(el.n2);
    for (int k = 0; k < n; ++k)
      out.push_back({ElementKind::Inductor, fmt::format("{}.L{}", el.name, k + 1), nodes[k], nodes[k + 1], Ls});
    for (int k = 0; k <= n; ++k) {
      if (is_ground(nodes[k])) continue;
      const double c = (k == 0 || k == n) ? Cs / 2 : Cs;
      out.push_back({ElementKind::Capacitor, fmt::format("{}.C{}", el.name, k), nodes[k], "0", c});
    }
  }
  return Netlist(std::move(out));
}

Netlist discretize_lines(const Netlist& net, double omega_max, int max_modes) {
  std::vector<Element> lines;
  for (auto& el : net.elements())
    if (el.kind == ElementKind::Line) lines.push_back(el);
  if (lines.empty()) return net;
  int n = 1;
  for (auto& l : lines) n = std::max(n, default_segments(l, omega_max));
  if (max_modes > 0) {
    // every extra cell adds one node per line
    const int base_nodes = net.node_count();
    while (n > 1 && base_nodes + static_cast<int>(lines.size()) * (n - 1) > max_modes) --n;
  }
  return discretize_lines(net, n);
}

HamiltonianModel linear_normal_modes(const Netlist& net) {
  const int n = net.node_count();
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n), K = Eigen::MatrixXd::Zero(n, n);
  auto stamp = [](Eigen::MatrixXd& M, int a, int b, double y) {
    if (a >= 0) M(a, a) += y;
    if (b >= 0) M(b, b) += y;
    if (a >= 0 && b >= 0) {
      M(a, b) -= y;
      M(b, a) -= y;
    }
  };
  std::vector<std::pair<int, int>> jj;
  HamiltonianModel m;
  for (auto& el : net.elements()) {
    int a = net.node_index(el.n1), b = net.node_index(el.n2);
    switch (el.kind) {
      case ElementKind::Capacitor: stamp(C, a, b, el.value); break;
      case ElementKind::Inductor: stamp(K, a, b, 1.0 / el.value); break;
      case ElementKind::Junction:
        stamp(K, a, b, 1.0 / el.value);
        if (el.cj > 0) stamp(C, a, b, el.cj);
        jj.emplace_back(a, b);
        m.E_J.push_back(phys::phi0 * phys::phi0 / el.value);
        break;
      case ElementKind::Line:
        throw Error(ErrorKind::Validation, fmt::format("line {} must be discretized first", el.name));
    }
  }
  if (jj.empty()) throw Error(ErrorKind::Validation, "no junctions in circuit");

  // massless nodes follow the massive ones adiabatically
  std::vector<int> heavy, light;
  for (int i = 0; i < n; ++i) (C.row(i).cwiseAbs().sum() > 0 ? heavy : light).push_back(i);
  const int h = static_cast<int>(heavy.size()), l = static_cast<int>(light.size());
  if (h == 0) throw Error(ErrorKind::SingularMass, "circuit has no capacitance");
  Eigen::MatrixXd Chh(h, h), Khh(h, h), Khl(h, l), Kll(l, l);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < h; ++c) {
      Chh(r, c) = C(heavy[r], heavy[c]);
      Khh(r, c) = K(heavy[r], heavy[c]);
    }
    for (int c = 0; c < l; ++c) Khl(r, c) = K(heavy[r], light[c]);
  }
  for (int r = 0; r < l; ++r)
    for (int c = 0; c < l; ++c) Kll(r, c) = K(light[r], light[c]);
  Eigen::MatrixXd lift = Eigen::MatrixXd::Zero(l, h);
  if (l > 0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Kll);
    if (!lu.isInvertible()) throw Error(ErrorKind::SingularMass, "massless nodes cannot be eliminated");
    lift = -lu.solve(Khl.transpose());
    Khh += Khl * lift;
  }
  Khh = (Khh + Khh.transpose()).eval() / 2;

  Eigen::LLT<Eigen::MatrixXd> llt(Chh);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularMass, "capacitance matrix not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Khh, Chh);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::SingularMass, "normal-mode eigensolver failed");
  const Eigen::VectorXd w2 = es.eigenvalues();
  const double scale = w2.cwiseAbs().maxCoeff();
  Eigen::MatrixXd V(n, h);
  for (int r = 0; r < h; ++r) V.row(heavy[r]) = es.eigenvectors().row(r);
  if (l > 0) {
    Eigen::MatrixXd Vl = lift * es.eigenvectors();
    for (int r = 0; r < l; ++r) V.row(light[r]) = Vl.row(r);
  }

  m.phase_zpf.resize(static_cast<int>(jj.size()), h);
  for (int k = 0; k < h; ++k) {
    if (!(w2(k) > 1e-12 * scale)) throw Error(ErrorKind::ZeroMode, "zero-frequency mode (floating island)");
    const double w = std::sqrt(w2(k));
    m.mode_freqs.push_back(w);
    for (std::size_t i = 0; i < jj.size(); ++i) {
      auto [a, b] = jj[i];
      const double d = (a >= 0 ? V(a, k) : 0.0) - (b >= 0 ? V(b, k) : 0.0);
      m.phase_zpf(static_cast<int>(i), k) = d * std::sqrt(phys::hbar / (2 * w)) / phys::phi0;
    }
  }
  for (int i = 0; i < m.phase_zpf.rows(); ++i) {
    int k;
    m.phase_zpf.row(i).cwiseAbs().maxCoeff(&k);
    if (std::find(m.qubit_modes.begin(), m.qubit_modes.end(), k) != m.qubit_modes.end())
      throw Error(ErrorKind::Labeling, fmt::format("junction {} shares its dominant mode with another junction", i + 1));
    m.qubit_modes.push_back(k);
  }
  return m;
}

Eigen::MatrixXcd displacement_elements(double theta, int levels) {
  Eigen::MatrixXcd D(levels, levels);
  const double x = theta * theta, env = std::exp(-x / 2);
  const std::complex<double> it(0.0, theta);
  for (int m = 0; m < levels; ++m)
    for (int n = 0; n < levels; ++n) {
      const int lo = std::min(m, n), d = std::abs(m - n);
      double ratio = 1.0;  // sqrt(lo! / (lo+d)!)
      for (int k = lo + 1; k <= lo + d; ++k) ratio /= std::sqrt(static_cast<double>(k));
      D(m, n) = ratio * std::pow(it, d) * env * std::assoc_laguerre(lo, d, x);
    }
  return D;
}

Eigen::MatrixXd position_power(int p, int levels) {
  const int big = levels + p + 1;
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(big, big);
  for (int k = 1; k < big; ++k) x(k - 1, k) = x(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(big, big);
  for (int k = 0; k < p; ++k) out = out * x;
  return out.topLeftCorner(levels, levels);
}

namespace {

constexpr int kPartialStates = 48;

struct Basis {
  int modes = 0;
  std::vector<int> dims;
  std::vector<int> occ;  // row-major D x modes
  std::map<std::vector<int>, int> index;
  int size() const { return static_cast<int>(occ.size()) / std::max(modes, 1); }
  const int* row(int s) const { return occ.data() + static_cast<std::size_t>(s) * modes; }
};

// the cap applies only once a non-qubit mode is excited, so the qubit product
// space stays complete and decoupled qubits stay separable
Basis make_basis(const std::vector<int>& dims, const std::vector<bool>& qubit, int cap) {
  Basis b;
  b.modes = static_cast<int>(dims.size());
  b.dims = dims;
  std::vector<int> cur(dims.size(), 0);
  auto rec = [&](auto&& self, int k, int used, bool other) -> void {
    if (k == b.modes) {
      b.index[cur] = b.size();
      b.occ.insert(b.occ.end(), cur.begin(), cur.end());
      return;
    }
    for (int n = 0; n < dims[k]; ++n) {
      const bool excited = other || (!qubit[k] && n > 0);
      if (cap > 0 && excited && used + n > cap) break;
      cur[k] = n;
      self(self, k + 1, used + n, excited);
    }
    cur[k] = 0;
  };
  rec(rec, 0, 0, false);
  return b;
}

void compositions(int p, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(p);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int i = 0; i <= p; ++i) {
    cur.push_back(i);
    compositions(p - i, parts - 1, cur, out);
    cur.pop_back();
  }
}

double multinomial(int p, const std::vector<int>& parts) {
  double r = std::tgamma(p + 1.0);
  for (int q : parts) r /= std::tgamma(q + 1.0);
  return r;
}

struct ModeOps {
  Eigen::VectorXd levels;              // rad/s
  std::vector<Eigen::MatrixXcd> disp;  // exp(i theta_j x) per junction
  Eigen::MatrixXd x1, x2;
  double energy(int n) const { return levels(n); }
};

struct Eigenpairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// lowest `count` eigenpairs of a symmetric matrix, ascending
Eigenpairs lowest_eigenpairs(Eigen::MatrixXd A, int count) {
  const int n = static_cast<int>(A.rows());
  count = std::min(count, n);
  Eigenpairs p;
  p.values.resize(n);
  p.vectors.resize(n, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', count < n ? 'I' : 'A', 'U', n, A.data(), n, 0.0, 0.0, 1,
                                         count, 0.0, &found, p.values.data(), p.vectors.data(), n, support.data());
  if (info != 0 || found != count)
    throw Error(ErrorKind::NotConverged, fmt::format("Hamiltonian diagonalization failed (info {})", info));
  p.values.conservativeResize(count);
  return p;
}

ModeOps mode_ops(const HamiltonianModel& m, int k, int dim) {
  ModeOps o;
  o.levels = Eigen::VectorXd::LinSpaced(dim, 0.0, (dim - 1) * m.mode_freqs[k]);
  for (int j = 0; j < static_cast<int>(m.E_J.size()); ++j)
    o.disp.push_back(displacement_elements(m.phase_zpf(j, k), dim));
  o.x1 = position_power(1, dim);
  o.x2 = position_power(2, dim);
  return o;
}

}  // namespace

OracleResult diagonalize(const HamiltonianModel& m, const Truncation& t, const OracleOptions& opt) {
  const int M = static_cast<int>(m.mode_freqs.size());
  const int J = static_cast<int>(m.E_J.size());
  if (J < 2) throw Error(ErrorKind::Validation, "oracle needs two junctions");
  if (t.qubit_levels < 3 || t.other_levels < 1) throw Error(ErrorKind::Validation, "truncation too small");
  std::vector<int> dims(M, t.other_levels);
  std::vector<bool> qubit(M, false);
  for (int q : m.qubit_modes) {
    dims[q] = t.qubit_levels;
    qubit[q] = true;
  }
  const Basis B = make_basis(dims, qubit, t.excitation_cap);
  const int D = B.size();

  std::vector<ModeOps> ops(M);
  for (int k = 0; k < M; ++k) ops[k] = mode_ops(m, k, dims[k]);

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(D, D);
  for (int s = 0; s < D; ++s)
    for (int k = 0; k < M; ++k) H(s, s) += ops[k].energy(B.row(s)[k]);

  if (opt.nonlinear) {
    if (opt.cosine == CosineModel::Full) {
      std::vector<double> ej(J);
      for (int j = 0; j < J; ++j) ej[j] = m.E_J[j] / phys::hbar;
      for (int s = 0; s < D; ++s) {
        const int* ns = B.row(s);
        for (int u = s; u < D; ++u) {
          const int* nu = B.row(u);
          int ndiff = 0, k1 = -1, k2 = -1;
          for (int k = 0; k < M; ++k)
            if (ns[k] != nu[k]) {
              if (++ndiff > 2) break;
              (k1 < 0 ? k1 : k2) = k;
            }
          double v = 0.0;
          for (int j = 0; j < J; ++j) {
            std::complex<double> prod = 1.0;
            for (int k = 0; k < M; ++k) prod *= ops[k].disp[j](ns[k], nu[k]);
            double phi2 = 0.0;
            if (ndiff <= 2) {
              auto x1 = [&](int k) { return m.phase_zpf(j, k) * ops[k].x1(ns[k], nu[k]); };
              auto x2 = [&](int k) { return m.phase_zpf(j, k) * m.phase_zpf(j, k) * ops[k].x2(ns[k], nu[k]); };
              if (ndiff == 2) {
                phi2 = 2 * x1(k1) * x1(k2);
              } else if (ndiff == 1) {
                phi2 = x2(k1);
                for (int l = 0; l < M; ++l)
                  if (l != k1) phi2 += 2 * x1(k1) * x1(l);
              } else {
                for (int k = 0; k < M; ++k) {
                  phi2 += x2(k);
                  for (int l = 0; l < M; ++l)
                    if (l != k) phi2 += x1(k) * x1(l);
                }
              }
            }
            v -= ej[j] * (prod.real() - (s == u ? 1.0 : 0.0) + phi2 / 2);
          }
          H(s, u) += v;
          if (u != s) H(u, s) += v;
        }
      }
    } else {
      for (int j = 0; j < J; ++j) {
        const double ej = m.E_J[j] / phys::hbar;
        std::vector<double> th(M);
        for (int k = 0; k < M; ++k) th[k] = m.phase_zpf(j, k);
        const int pmax = opt.cosine == CosineModel::Order6 ? 6 : 4;
        struct Term {
          double coef;
          std::vector<int> parts;
        };
        std::vector<Term> terms;
        std::vector<std::vector<Eigen::MatrixXd>> Xp(M);
        for (int k = 0; k < M; ++k)
          for (int p = 0; p <= pmax; ++p) Xp[k].push_back(position_power(p, dims[k]));
        for (int p = 4; p <= pmax; p += 2) {
          const double c = p == 4 ? -1.0 / 24 : 1.0 / 720;
          std::vector<std::vector<int>> comps;
          std::vector<int> cur;
          compositions(p, M, cur, comps);
          for (auto& parts : comps) {
            double coef = c * multinomial(p, parts);
            for (int k = 0; k < M; ++k) coef *= std::pow(th[k], parts[k]);
            if (coef != 0.0) terms.push_back({coef, parts});
          }
        }
        for (int s = 0; s < D; ++s) {
          const int* ns = B.row(s);
          for (int u = s; u < D; ++u) {
            const int* nu = B.row(u);
            double acc = 0.0;
            for (auto& tm : terms) {
              double v = tm.coef;
              for (int k = 0; k < M && v != 0.0; ++k) v *= Xp[k][tm.parts[k]](ns[k], nu[k]);
              acc += v;
            }
            const double v = ej * acc;
            H(s, u) += v;
            if (u != s) H(u, s) += v;
          }
        }
      }
    }
  }

  OracleResult r;
  r.dimension = D;
  r.hermiticity = (H - H.transpose()).cwiseAbs().maxCoeff();
  const int q1 = m.qubit_modes[0], q2 = m.qubit_modes[1];
  auto bare_index = [&](int n1, int n2) {
    std::vector<int> occ(M, 0);
    occ[q1] = n1;
    occ[q2] = n2;
    auto it = B.index.find(occ);
    if (it == B.index.end()) throw Error(ErrorKind::Labeling, "bare state outside the truncated basis");
    return it->second;
  };

  // a partial spectrum settles a label once some eigenvector holds more than half of the bare state;
  // otherwise the full spectrum is needed
  const std::vector<int> probes = {bare_index(0, 0), bare_index(1, 0), bare_index(0, 1),
                                   bare_index(1, 1), bare_index(2, 0), bare_index(0, 2)};
  Eigenpairs ep = lowest_eigenpairs(H, kPartialStates);
  if (ep.values.size() < D) {
    for (int s : probes)
      if (ep.vectors.row(s).cwiseAbs2().maxCoeff() <= 0.5) {
        ep = lowest_eigenpairs(H, D);
        break;
      }
  }
  const Eigen::VectorXd& E = ep.values;
  const Eigen::MatrixXd& U = ep.vectors;
  const int K = static_cast<int>(E.size());
  auto bare_energy = [&](const std::vector<int>& occ) {
    double e = 0;
    for (int k = 0; k < M; ++k) e += ops[k].energy(occ[k]);
    return e;
  };
  auto label = [&](int n1, int n2, bool required) -> std::pair<double, double> {
    const int s = bare_index(n1, n2);
    int best = 0;
    double ov = -1;
    const double eb = bare_energy(std::vector<int>(B.row(s), B.row(s) + M));
    for (int n = 0; n < K; ++n) {
      const double o = U(s, n) * U(s, n);
      if (o > ov + 1e-12 || (std::abs(o - ov) <= 1e-12 && std::abs(E(n) - eb) < std::abs(E(best) - eb))) {
        ov = o;
        best = n;
      }
    }
    if (ov < opt.overlap_threshold) {
      if (required)
        throw Error(ErrorKind::Labeling, fmt::format("state |{}{}> has max overlap {:.3f}", n1, n2, ov));
      return {std::numeric_limits<double>::quiet_NaN(), ov};
    }
    Occupation key{n1, n2};
    r.spectrum.labels[key] = best;
    r.spectrum.overlap[key] = ov;
    return {E(best), ov};
  };
  auto [e00, o00] = label(0, 0, true);
  auto [e10, o10] = label(1, 0, true);
  auto [e01, o01] = label(0, 1, true);
  auto [e11, o11] = label(1, 1, true);
  auto [e20, o20] = label(2, 0, false);
  auto [e02, o02] = label(0, 2, false);
  (void)o20;
  (void)o02;
  r.min_overlap = std::min({o00, o10, o01, o11});
  r.zz = (e11 - e10) - (e01 - e00);
  r.omega10 = e10 - e00;
  r.omega01 = e01 - e00;
  r.anharm1 = e20 - 2 * e10 + e00;
  r.anharm2 = e02 - 2 * e01 + e00;
  r.spectrum.energies.resize(K);
  for (int n = 0; n < K; ++n) r.spectrum.energies[n] = E(n) - E(0);
  return r;
}

OracleResult oracle_zz(const HamiltonianModel& m, const OracleOptions& opt) {
  OracleResult r = diagonalize(m, opt.truncation, opt);
  if (opt.convergence) {
    const OracleResult b = diagonalize(m, opt.truncation.bumped(), opt);
    r.convergence = std::abs(b.zz - r.zz);
    r.converged = r.convergence <= opt.tolerance;
  }
  return r;
}

}  // namespace zzi
