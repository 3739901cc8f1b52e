#include "zzi/microwave.hpp"

#include <fmt/format.h>

#include <boost/math/interpolators/makima.hpp>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "zzi/constants.hpp"
#include "zzi/errors.hpp"

namespace zzi {

using namespace std::complex_literals;

Eigen::Matrix2cd tl_two_port_admittance(double z0, double length, double eps_eff, double omega) {
  if (!(omega > 0)) throw Error(ErrorKind::Validation, "line stamp needs omega > 0");
  const double bl = omega * std::sqrt(eps_eff) / phys::c0 * length;
  const double k = std::round(bl / std::numbers::pi);
  if (std::abs(bl - k * std::numbers::pi) < 1e-9)
    throw Error(ErrorKind::StampSingularity,
                fmt::format("line resonance at beta*l = {:.12g} rad (omega = {:.9g} rad/s)", bl, omega));
  const cplx y11 = -1i / (std::tan(bl) * z0);
  const cplx y12 = 1i / (std::sin(bl) * z0);
  Eigen::Matrix2cd Y;
  Y << y11, y12, y12, y11;
  return Y;
}

cplx ImpedanceProvider::derivative(double omega, int i, int j) const {
  auto d = [&](double h) {
    return (impedance(omega * (1 + h))(i, j) - impedance(omega * (1 - h))(i, j)) / (2 * omega * h);
  };
  const double h = h_rel_;
  return (4.0 * d(h / 2) - d(h)) / 3.0;
}

NodalCircuit::NodalCircuit(Netlist net) : net_(std::move(net)) {
  if (net_.port_count() == 0) throw Error(ErrorKind::Validation, "netlist has no junction ports");
  incidence_ = Eigen::MatrixXd::Zero(net_.node_count(), net_.port_count());
  for (int k = 0; k < net_.port_count(); ++k) {
    int a = net_.node_index(net_.ports()[k].n1), b = net_.node_index(net_.ports()[k].n2);
    if (a >= 0) incidence_(a, k) += 1.0;
    if (b >= 0) incidence_(b, k) -= 1.0;
  }
}

Eigen::MatrixXcd NodalCircuit::node_admittance(double omega) const {
  const int n = net_.node_count();
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  auto stamp = [&](int a, int b, cplx y) {
    if (a >= 0) Y(a, a) += y;
    if (b >= 0) Y(b, b) += y;
    if (a >= 0 && b >= 0) {
      Y(a, b) -= y;
      Y(b, a) -= y;
    }
  };
  for (auto& el : net_.elements()) {
    int a = net_.node_index(el.n1), b = net_.node_index(el.n2);
    switch (el.kind) {
      case ElementKind::Capacitor:
        stamp(a, b, 1i * omega * el.value);
        break;
      case ElementKind::Inductor:
        stamp(a, b, 1.0 / (1i * omega * el.value));
        break;
      case ElementKind::Junction:
        if (el.cj > 0) stamp(a, b, 1i * omega * el.cj);
        break;
      case ElementKind::Line: {
        auto T = tl_two_port_admittance(el.value, el.length, el.eps_eff, omega);
        if (a >= 0) Y(a, a) += T(0, 0);
        if (b >= 0) Y(b, b) += T(1, 1);
        if (a >= 0 && b >= 0) {
          Y(a, b) += T(0, 1);
          Y(b, a) += T(1, 0);
        }
        break;
      }
    }
  }
  return Y;
}

Eigen::MatrixXcd NodalCircuit::impedance(double omega) const {
  if (!(omega > 0)) throw Error(ErrorKind::Validation, "impedance needs omega > 0");
  Eigen::MatrixXcd Y = node_admittance(omega);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Y);
  if (!(lu.rcond() > 1e-15))
    throw Error(ErrorKind::PoleProximity, fmt::format("node matrix singular at omega = {:.9g} rad/s", omega));
  Eigen::MatrixXcd X = lu.solve(incidence_.cast<cplx>());
  Eigen::MatrixXcd Z = incidence_.transpose().cast<cplx>() * X;
  return (Z + Z.transpose()) / 2.0;
}

RationalZ12::RationalZ12(double A, std::vector<double> zeros, std::vector<double> poles, double c1, double c2)
    : A_(A), zeros_(std::move(zeros)), c_{c1, c2} {
  if (!(c1 > 0 && c2 > 0)) throw Error(ErrorKind::Validation, "rational model needs positive shunt capacitances");
  for (double p : poles) {
    if (p == 0.0) {
      if (dc_pole_) throw Error(ErrorKind::Validation, "DC pole listed twice");
      dc_pole_ = true;
    } else {
      poles_.push_back(p);
    }
  }
}

double RationalZ12::reactance12(double w) const {
  double num = A_, den = dc_pole_ ? w : 1.0;
  for (double z : zeros_) num *= z * z - w * w;
  for (double p : poles_) den *= p * p - w * w;
  if (den == 0.0) throw Error(ErrorKind::PoleProximity, fmt::format("rational pole at omega = {:.9g}", w));
  return num / den;
}

double RationalZ12::reactance12_prime(double w) const {
  // quotient rule on N/D with both written as products
  double N = A_, dN = 0.0;
  for (std::size_t k = 0; k < zeros_.size(); ++k) {
    double term = -2 * w * A_;
    for (std::size_t l = 0; l < zeros_.size(); ++l)
      if (l != k) term *= zeros_[l] * zeros_[l] - w * w;
    dN += term;
    N *= zeros_[k] * zeros_[k] - w * w;
  }
  std::vector<double> f;
  if (dc_pole_) f.push_back(w);
  for (double p : poles_) f.push_back(p * p - w * w);
  double D = 1.0, dD = 0.0;
  for (double x : f) D *= x;
  for (std::size_t k = 0; k < f.size(); ++k) {
    double term = (dc_pole_ && k == 0) ? 1.0 : -2 * w;
    for (std::size_t l = 0; l < f.size(); ++l)
      if (l != k) term *= f[l];
    dD += term;
  }
  if (D == 0.0) throw Error(ErrorKind::PoleProximity, fmt::format("rational pole at omega = {:.9g}", w));
  return (dN * D - N * dD) / (D * D);
}

Eigen::MatrixXcd RationalZ12::impedance(double w) const {
  if (!(w > 0)) throw Error(ErrorKind::Validation, "impedance needs omega > 0");
  Eigen::MatrixXcd Z(2, 2);
  Z(0, 0) = 1.0 / (1i * w * c_[0]);
  Z(1, 1) = 1.0 / (1i * w * c_[1]);
  Z(0, 1) = Z(1, 0) = 1i * reactance12(w);
  return Z;
}

cplx RationalZ12::derivative(double w, int i, int j) const {
  if (i == j) return 1i / (w * w * c_[i]);
  return 1i * reactance12_prime(w);
}

struct Tabulated::Interp {
  boost::math::interpolators::makima<std::vector<double>> re, im;
  Interp(std::vector<double> x, std::vector<double> r, std::vector<double> i)
      : re(std::vector<double>(x), std::move(r)), im(std::move(x), std::move(i)) {}
};

Tabulated::~Tabulated() = default;

Tabulated::Tabulated(std::vector<double> omega, std::vector<Eigen::MatrixXcd> entries, Eigen::MatrixX<bool> present,
                     std::vector<double> fallback_caps)
    : n_(static_cast<int>(present.rows())), omega_(std::move(omega)), caps_(std::move(fallback_caps)) {
  if (omega_.size() < 4) throw Error(ErrorKind::Validation, "tabulated data needs at least 4 frequency points");
  if (entries.size() != omega_.size()) throw Error(ErrorKind::Validation, "tabulated data size mismatch");
  for (std::size_t k = 1; k < omega_.size(); ++k)
    if (!(omega_[k] > omega_[k - 1])) throw Error(ErrorKind::Validation, "frequency axis not strictly increasing");
  source_ = Eigen::MatrixXi::Constant(n_, n_, -1);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      const bool up = present(i, j), lo = present(j, i);
      if (!up && !lo) {
        if (i == j && static_cast<int>(caps_.size()) > i && caps_[i] > 0) continue;
        throw Error(ErrorKind::Validation, fmt::format("tabulated data lacks Z_{}_{}", i + 1, j + 1));
      }
      std::vector<double> re(omega_.size()), im(omega_.size());
      for (std::size_t k = 0; k < omega_.size(); ++k) {
        cplx z = up && lo ? (entries[k](i, j) + entries[k](j, i)) / 2.0 : up ? entries[k](i, j) : entries[k](j, i);
        re[k] = z.real();
        im[k] = z.imag();
      }
      source_(i, j) = source_(j, i) = static_cast<int>(interp_.size());
      interp_.push_back(std::make_unique<Interp>(omega_, std::move(re), std::move(im)));
    }
}

Eigen::MatrixXcd Tabulated::impedance(double w) const {
  if (!(w >= omega_.front() && w <= omega_.back()))
    throw Error(ErrorKind::Extrapolation,
                fmt::format("{:.6f} GHz outside tabulated range [{:.6f}, {:.6f}] GHz", phys::ghz(w), phys::ghz(omega_.front()),
                            phys::ghz(omega_.back())));
  Eigen::MatrixXcd Z(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      int s = source_(i, j);
      if (s < 0)
        Z(i, j) = 1.0 / (1i * w * caps_[i]);
      else
        Z(i, j) = cplx(interp_[s]->re(w), interp_[s]->im(w));
    }
  return Z;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace zzi
