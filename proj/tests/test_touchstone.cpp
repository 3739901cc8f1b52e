#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "zzi/calibrate.hpp"
#include "zzi/circuits.hpp"
#include "zzi/dispersive.hpp"
#include "zzi/errors.hpp"
#include "zzi/microwave.hpp"

using namespace zzi;
using phys::two_pi;

namespace {

std::vector<double> grid(double f0, double f1, int n) {
  std::vector<double> f;
  for (int k = 0; k < n; ++k) f.push_back(f0 + (f1 - f0) * k / (n - 1));
  return f;
}

ErrorKind error_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::Io;
}

}  // namespace

TEST(Touchstone, MatchedLoadGivesReferenceImpedance) {
  auto t = read_touchstone("# GHz S RI R 50\n4 0 0 0 0 0 0 0 0\n4.5 0 0 0 0 0 0 0 0\n5.5 0 0 0 0 0 0 0 0\n6 0 0 0 0 0 0 0 0\n", 50);
  const auto Z = t->impedance(two_pi * 5e9);
  EXPECT_NEAR(std::abs(Z(0, 0) - 50.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(Z(1, 1) - 50.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(Z(0, 1)), 0.0, 1e-12);
}

TEST(Touchstone, FormatsAgree) {
  // one-port reflection 0.6 at -40 degrees written three ways
  const double mag = 0.6, deg = -40, rad = deg * std::numbers::pi / 180;
  const double db = 20 * std::log10(mag);
  auto file = [](const char* fmt_name, double a, double b) {
    std::string s = fmt::format("# MHz S {} R 50\n", fmt_name);
    for (int f : {4000, 4500, 5500, 6000}) s += fmt::format("{} {:.17g} {:.17g}\n", f, a, b);
    return s;
  };
  const std::string ri = file("RI", mag * std::cos(rad), mag * std::sin(rad));
  const std::string ma = file("MA", mag, deg);
  const std::string dbs = file("DB", db, deg);
  const double w = two_pi * 5e9;
  const cplx s = std::polar(mag, rad), expect = 50.0 * (1.0 + s) / (1.0 - s);
  for (const auto& text : {ri, ma, dbs}) {
    const auto z = read_touchstone(text, 50)->impedance(w)(0, 0);
    EXPECT_NEAR(std::abs(z - expect), 0.0, 1e-9 * std::abs(expect));
  }
}

TEST(Touchstone, RoundTripThroughS) {
  NodalCircuit bus(bus_netlist(7e9));
  const auto f = grid(4e9, 6e9, 81);
  const std::string text = write_touchstone(bus, f, 50);
  EXPECT_EQ(text.substr(0, 14), "# HZ S RI R 50");
  auto t = read_touchstone(text, 50);
  EXPECT_EQ(t->port_count(), 2);
  for (double fk : {4e9, 4.75e9, 5.5e9, 6e9}) {
    const auto a = t->impedance(two_pi * fk), b = bus.impedance(two_pi * fk);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(a(i, j) - b(i, j)), 0.0, 1e-8 * std::abs(b(i, j))) << fk;
  }
}

TEST(Touchstone, NonReciprocalDataIsAveraged) {
  // S21 = 0.5, S12 = 0 gives Z21 = 50, Z12 = 0 before the reciprocal average
  auto t = read_touchstone("# GHz S RI R 50\n1 0 0 0.5 0 0 0 0 0\n1.2 0 0 0.5 0 0 0 0 0\n1.8 0 0 0.5 0 0 0 0 0\n"
                           "2 0 0 0.5 0 0 0 0 0\n",
                           50);
  const auto Z = t->impedance(two_pi * 1.5e9);
  EXPECT_NEAR(std::abs(Z(1, 0) - 25.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(Z(0, 1) - 25.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(Z(0, 0) - 50.0), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(Z(1, 1) - 50.0), 0.0, 1e-12);
}

TEST(Touchstone, OptionLineReferenceWins) {
  const std::string text = "# GHz S RI R 25\n1 0 0\n1.2 0 0\n1.8 0 0\n2 0 0\n";
  EXPECT_NEAR(read_touchstone(text, 50)->impedance(two_pi * 1.5e9)(0, 0).real(), 25.0, 1e-12);
  const std::string bare = "# GHz S RI\n1 0 0\n1.2 0 0\n1.8 0 0\n2 0 0\n";
  EXPECT_NEAR(read_touchstone(bare, 75)->impedance(two_pi * 1.5e9)(0, 0).real(), 75.0, 1e-12);
}

TEST(Touchstone, Rejections) {
  EXPECT_EQ(error_of([] { read_touchstone("# GHz Z RI R 50\n1 0 0\n", 50); }), ErrorKind::Syntax);
  EXPECT_EQ(error_of([] { read_touchstone("# GHz S RI R 50\n2 0 0\n1 0 0\n", 50); }), ErrorKind::Validation);
  EXPECT_EQ(error_of([] { read_touchstone("# GHz S RI R 50\n", 50); }), ErrorKind::Syntax);
  EXPECT_EQ(error_of([] { read_touchstone("# GHz S RI R 50\n1 1 0\n2 0 0\n", 50); }), ErrorKind::PoleProximity);
  try {
    read_touchstone("# GHz S RI R 50\n1 0 0\n2 x 0\n", 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ZTable, RoundTrip) {
  NodalCircuit bus(bus_netlist(7e9));
  const auto f = grid(4e9, 6e9, 41);
  const std::string text = write_zcsv(bus, f);
  auto t = read_zcsv(text);
  EXPECT_EQ(write_zcsv(*t, f), text);
}

TEST(ZTable, Rejections) {
  EXPECT_EQ(error_of([] { read_zcsv("f,re_z_1_1,im_z_1_1\n1,0,1\n"); }), ErrorKind::Syntax);
  EXPECT_EQ(error_of([] { read_zcsv("freq_hz,re_z_1_1\n1,0\n2,0\n"); }), ErrorKind::Syntax);
  EXPECT_EQ(error_of([] { read_zcsv("freq_hz,re_z_1_1,im_z_1_1\n2,0,1\n1,0,1\n"); }), ErrorKind::Validation);
  try {
    read_zcsv("freq_hz,re_z_1_1,im_z_1_1\n1,0,1\n2,0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Syntax);
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ZTable, IngestionFidelity) {
  auto bus = std::make_shared<NodalCircuit>(bus_netlist(7e9));
  const std::vector<double> C = {capacitive_reduction(bus->netlist())(0, 0),
                                 capacitive_reduction(bus->netlist())(1, 1)};
  const std::vector<double> targets = {two_pi * 5.0e9, two_pi * 5.2e9};
  const auto lj = tune_all(*bus, C, targets);
  const auto direct = analyze(*bus, C, lj.base, lj.corrected);

  auto table = read_zcsv(write_zcsv(*bus, grid(4.0e9, 6.0e9, 401)));
  const auto ingested = analyze(*table, C, lj.base, lj.corrected);
  const double a = direct.pairs[0].zz.at(MethodVariant::ZMethod), b = ingested.pairs[0].zz.at(MethodVariant::ZMethod);
  EXPECT_NEAR(b, a, 0.005 * std::abs(a));
}
