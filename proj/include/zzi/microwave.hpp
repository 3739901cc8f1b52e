#pragma once

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zzi/netlist.hpp"

namespace zzi {

using cplx = std::complex<double>;

struct ZSample {
  double omega = 0.0;
  Eigen::MatrixXcd Z;
};

Eigen::Matrix2cd tl_two_port_admittance(double z0, double length, double eps_eff, double omega);

class ImpedanceProvider {
 public:
  virtual ~ImpedanceProvider() = default;
  virtual int port_count() const = 0;
  virtual Eigen::MatrixXcd impedance(double omega) const = 0;
  // central difference with one Richardson step unless overridden
  virtual cplx derivative(double omega, int i, int j) const;
  virtual std::string describe() const = 0;

  ZSample sample(double omega) const { return {omega, impedance(omega)}; }
  void set_step(double h_rel) { h_rel_ = h_rel; }
  double step() const { return h_rel_; }

 private:
  double h_rel_ = 1e-6;
};

using ProviderPtr = std::shared_ptr<const ImpedanceProvider>;

class NodalCircuit final : public ImpedanceProvider {
 public:
  explicit NodalCircuit(Netlist net);
  int port_count() const override { return net_.port_count(); }
  Eigen::MatrixXcd impedance(double omega) const override;
  std::string describe() const override { return "nodal"; }
  Eigen::MatrixXcd node_admittance(double omega) const;
  const Netlist& netlist() const { return net_; }

 private:
  Netlist net_;
  Eigen::MatrixXd incidence_;
};

// Z12 = j A prod(wz^2 - w^2) / (w^k prod(wp^2 - w^2)), k = 1 when a DC pole is listed.
// Diagonals are the bare shunt capacitors.
class RationalZ12 final : public ImpedanceProvider {
 public:
  RationalZ12(double A, std::vector<double> zeros, std::vector<double> poles, double c1, double c2);
  int port_count() const override { return 2; }
  Eigen::MatrixXcd impedance(double omega) const override;
  cplx derivative(double omega, int i, int j) const override;
  std::string describe() const override { return "rational"; }

  double reactance12(double omega) const;
  double reactance12_prime(double omega) const;
  const std::vector<double>& zeros() const { return zeros_; }
  const std::vector<double>& poles() const { return poles_; }
  double c1() const { return c_[0]; }
  double c2() const { return c_[1]; }

 private:
  double A_;
  std::vector<double> zeros_, poles_;
  bool dc_pole_ = false;
  double c_[2];
};

class Tabulated final : public ImpedanceProvider {
 public:
  // entries[k](i,j) valid where present(i,j); missing diagonals fall back to
  // 1/(j w C_i) when fallback_caps is given, missing off-diagonals mirror their transpose
  Tabulated(std::vector<double> omega, std::vector<Eigen::MatrixXcd> entries, Eigen::MatrixX<bool> present,
            std::vector<double> fallback_caps = {});
  ~Tabulated() override;
  int port_count() const override { return n_; }
  Eigen::MatrixXcd impedance(double omega) const override;
  std::string describe() const override { return "tabulated"; }
  double omega_min() const { return omega_.front(); }
  double omega_max() const { return omega_.back(); }

 private:
  struct Interp;
  int n_ = 0;
  std::vector<double> omega_;
  std::vector<double> caps_;
  Eigen::MatrixXi source_;  // index into interp_, -1 capacitor model
  std::vector<std::unique_ptr<Interp>> interp_;
};

std::shared_ptr<Tabulated> read_touchstone(const std::string& text, double reference_impedance,
                                           int ports_hint = 0, std::vector<double> fallback_caps = {});
std::shared_ptr<Tabulated> read_zcsv(const std::string& text, std::vector<double> fallback_caps = {});
std::string write_zcsv(const ImpedanceProvider& p, const std::vector<double>& freqs_hz);
std::string write_touchstone(const ImpedanceProvider& p, const std::vector<double>& freqs_hz, double z_ref);

std::string read_file(const std::string& path);

}  // namespace zzi
