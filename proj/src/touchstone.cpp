#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <regex>

#include "zzi/constants.hpp"
#include "zzi/errors.hpp"
#include "zzi/microwave.hpp"

namespace zzi {

namespace {

std::vector<std::string> tokens(const std::string& line, char sep = 0) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto b = cur.find_first_not_of(" \t\r");
    auto e = cur.find_last_not_of(" \t\r");
    if (b != std::string::npos)
      out.push_back(cur.substr(b, e - b + 1));
    else if (sep)
      out.emplace_back();
    cur.clear();
  };
  for (char c : line) {
    bool split = sep ? c == sep : (c == ' ' || c == '\t' || c == '\r');
    if (split)
      flush();
    else
      cur += c;
  }
  flush();
  return out;
}

double to_double(const std::string& s, int line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw Error(ErrorKind::Syntax, fmt::format("line {}: bad number '{}'", line, s), line);
  return v;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    out.push_back(text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

std::shared_ptr<Tabulated> read_touchstone(const std::string& text, double reference_impedance, int ports_hint,
                                           std::vector<double> fallback_caps) {
  double unit = 1e9, zref = reference_impedance;
  enum { MA, DB, RI } format = MA;
  bool seen_option = false;
  std::vector<std::vector<double>> rows;
  std::vector<int> row_line;
  auto ls = lines_of(text);
  for (std::size_t k = 0; k < ls.size(); ++k) {
    int lineno = static_cast<int>(k + 1);
    std::string l = ls[k];
    if (auto c = l.find('!'); c != std::string::npos) l = l.substr(0, c);
    auto t = tokens(l);
    if (t.empty()) continue;
    if (t[0][0] == '[') throw Error(ErrorKind::Syntax, fmt::format("line {}: Touchstone v2 keywords are not supported", lineno), lineno);
    if (t[0][0] == '#') {
      if (seen_option) continue;  // only the first option line counts
      seen_option = true;
      std::vector<std::string> opts;
      for (auto& s : t) {
        auto u = upper(s);
        if (u == "#") continue;
        if (u[0] == '#') u = u.substr(1);
        opts.push_back(u);
      }
      for (std::size_t i = 0; i < opts.size(); ++i) {
        const auto& o = opts[i];
        if (o == "HZ") unit = 1;
        else if (o == "KHZ") unit = 1e3;
        else if (o == "MHZ") unit = 1e6;
        else if (o == "GHZ") unit = 1e9;
        else if (o == "S") {
        } else if (o == "Y" || o == "Z" || o == "G" || o == "H")
          throw Error(ErrorKind::Syntax, fmt::format("line {}: unsupported parameter type '{}'", lineno, o), lineno);
        else if (o == "MA") format = MA;
        else if (o == "DB") format = DB;
        else if (o == "RI") format = RI;
        else if (o == "R" && i + 1 < opts.size()) zref = to_double(opts[++i], lineno);
        else
          throw Error(ErrorKind::Syntax, fmt::format("line {}: unsupported option '{}'", lineno, o), lineno);
      }
      continue;
    }
    std::vector<double> v;
    for (auto& s : t) v.push_back(to_double(s, lineno));
    rows.push_back(std::move(v));
    row_line.push_back(lineno);
  }
  if (rows.empty()) throw Error(ErrorKind::Syntax, "Touchstone data is empty");
  if (!(zref > 0)) throw Error(ErrorKind::Validation, "reference impedance must be positive");

  int N = ports_hint;
  if (N == 0) {
    std::size_t t0 = rows[0].size();
    if (t0 == 3) N = 1;
    else if (t0 == 7) N = 3;
    else if (t0 == 9) N = (rows.size() > 1 && rows[1].size() == 8) ? 4 : 2;
    else throw Error(ErrorKind::Syntax, fmt::format("cannot infer port count from {} values on the first data line", t0));
  }
  if (N < 1 || N > 4) throw Error(ErrorKind::Validation, "only 1 to 4 ports are supported");
  std::vector<double> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  const std::size_t rec = 1 + 2 * N * N;
  if (flat.size() % rec != 0)
    throw Error(ErrorKind::Syntax, fmt::format("{} values do not form whole {}-port records", flat.size(), N));

  std::vector<double> omega;
  std::vector<Eigen::MatrixXcd> Z;
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  for (std::size_t r = 0; r * rec < flat.size(); ++r) {
    const double* p = flat.data() + r * rec;
    double f = p[0] * unit;
    if (!omega.empty() && !(phys::two_pi * f > omega.back()))
      throw Error(ErrorKind::Validation, fmt::format("non-monotone frequency axis at {} Hz", f));
    Eigen::MatrixXcd S(N, N);
    for (int k = 0; k < N * N; ++k) {
      double a = p[1 + 2 * k], b = p[2 + 2 * k];
      cplx s;
      if (format == RI) s = {a, b};
      else if (format == MA) s = std::polar(a, b * std::numbers::pi / 180);
      else s = std::polar(std::pow(10.0, a / 20), b * std::numbers::pi / 180);
      int row = k / N, col = k % N;
      if (N == 2) std::swap(row, col);  // 2-port order is S11 S21 S12 S22
      S(row, col) = s;
    }
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(I - S);
    if (!lu.isInvertible()) throw Error(ErrorKind::PoleProximity, fmt::format("(I - S) singular at {} Hz", f));
    omega.push_back(phys::two_pi * f);
    Z.push_back(zref * (I + S) * lu.inverse());
  }
  Eigen::MatrixX<bool> present = Eigen::MatrixX<bool>::Constant(N, N, true);
  return std::make_shared<Tabulated>(std::move(omega), std::move(Z), present, std::move(fallback_caps));
}

std::shared_ptr<Tabulated> read_zcsv(const std::string& text, std::vector<double> fallback_caps) {
  auto ls = lines_of(text);
  std::size_t k = 0;
  while (k < ls.size() && tokens(ls[k]).empty()) ++k;
  if (k == ls.size()) throw Error(ErrorKind::Syntax, "empty Z table");
  auto head = tokens(ls[k], ',');
  if (head.empty() || head[0] != "freq_hz")
    throw Error(ErrorKind::Syntax, "Z table header must start with freq_hz", static_cast<int>(k + 1));
  static const std::regex col(R"((re|im)_z_(\d+)_(\d+))");
  struct Col { bool re; int i, j; };
  std::vector<Col> cols;
  int N = 0;
  for (std::size_t c = 1; c < head.size(); ++c) {
    std::smatch m;
    if (!std::regex_match(head[c], m, col))
      throw Error(ErrorKind::Syntax, fmt::format("bad Z table column '{}'", head[c]), static_cast<int>(k + 1));
    Col cc{m[1] == "re", std::stoi(m[2]) - 1, std::stoi(m[3]) - 1};
    if (cc.i < 0 || cc.j < 0) throw Error(ErrorKind::Syntax, "port indices are 1-based", static_cast<int>(k + 1));
    N = std::max({N, cc.i + 1, cc.j + 1});
    cols.push_back(cc);
  }
  if (N == 0) throw Error(ErrorKind::Syntax, "Z table has no impedance columns");
  Eigen::MatrixX<bool> present = Eigen::MatrixX<bool>::Constant(N, N, false);
  Eigen::MatrixXi have = Eigen::MatrixXi::Zero(N, N);
  for (auto& c : cols) have(c.i, c.j) |= c.re ? 1 : 2;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (have(i, j) == 3) present(i, j) = true;
      else if (have(i, j) != 0)
        throw Error(ErrorKind::Syntax, fmt::format("Z table has only one of re/im for Z_{}_{}", i + 1, j + 1));
    }

  std::vector<double> omega;
  std::vector<Eigen::MatrixXcd> Z;
  for (++k; k < ls.size(); ++k) {
    int lineno = static_cast<int>(k + 1);
    auto t = tokens(ls[k], ',');
    if (t.size() == 1 && t[0].empty()) continue;
    if (t.size() != head.size())
      throw Error(ErrorKind::Syntax, fmt::format("line {}: expected {} columns, got {}", lineno, head.size(), t.size()), lineno);
    double f = to_double(t[0], lineno);
    if (!omega.empty() && !(phys::two_pi * f > omega.back()))
      throw Error(ErrorKind::Validation, fmt::format("line {}: freq_hz not strictly increasing", lineno), lineno);
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(N, N);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      double v = to_double(t[c + 1], lineno);
      auto& e = M(cols[c].i, cols[c].j);
      e = cols[c].re ? cplx(v, e.imag()) : cplx(e.real(), v);
    }
    omega.push_back(phys::two_pi * f);
    Z.push_back(std::move(M));
  }
  return std::make_shared<Tabulated>(std::move(omega), std::move(Z), present, std::move(fallback_caps));
}

std::string write_zcsv(const ImpedanceProvider& p, const std::vector<double>& freqs_hz) {
  const int N = p.port_count();
  std::string out = "freq_hz";
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) out += fmt::format(",re_z_{0}_{1},im_z_{0}_{1}", i + 1, j + 1);
  out += "\n";
  for (double f : freqs_hz) {
    auto Z = p.impedance(phys::two_pi * f);
    out += fmt::format("{:.17g}", f);
    for (int i = 0; i < N; ++i)
      for (int j = i; j < N; ++j) out += fmt::format(",{:.17g},{:.17g}", Z(i, j).real(), Z(i, j).imag());
    out += "\n";
  }
  return out;
}

std::string write_touchstone(const ImpedanceProvider& p, const std::vector<double>& freqs_hz, double z_ref) {
  const int N = p.port_count();
  if (N > 4) throw Error(ErrorKind::Validation, "Touchstone export supports at most 4 ports");
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  std::string out = fmt::format("# HZ S RI R {:.17g}\n", z_ref);
  for (double f : freqs_hz) {
    Eigen::MatrixXcd Z = p.impedance(phys::two_pi * f);
    Eigen::MatrixXcd S = (Z - z_ref * I) * (Z + z_ref * I).inverse();
    out += fmt::format("{:.17g}", f);
    for (int r = 0; r < N; ++r) {
      for (int c = 0; c < N; ++c) {
        cplx s = N == 2 ? S(c, r) : S(r, c);
        out += fmt::format(" {:.17g} {:.17g}", s.real(), s.imag());
      }
      if (N > 2 && r + 1 < N) out += "\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace zzi
