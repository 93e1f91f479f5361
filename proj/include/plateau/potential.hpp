#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plateau {

struct ValueDeriv {
  double value;
  double deriv;
};

namespace detail {

inline double adaptive_simpson_step(const std::function<double(double)>& f, double a, double b,
                                    double fa, double fm, double fb, double whole, double tol,
                                    int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Composite adaptive Simpson quadrature of f over [a,b]; the interval is pre-split so that
// integrands with kinks cannot fool the error estimate on the first levels.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int pieces = 64) {
  if (b <= a) return 0.0;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    double x0 = a + (b - a) * k / pieces, x1 = a + (b - a) * (k + 1) / pieces;
    double fa = f(x0), fb = f(x1), fm = f(0.5 * (x0 + x1));
    double whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
    total += detail::adaptive_simpson_step(f, x0, x1, fa, fm, fb, whole, tol / pieces, 40);
  }
  return total;
}

// Cubic spline through (x_i, y_i), x strictly increasing. The end second derivatives are
// extrapolated linearly from the interior ones, so quadratic data is reproduced exactly.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 4 || y_.size() != n) throw std::invalid_argument("spline needs at least 4 points");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("spline abscissae must increase");
    m_.assign(n, 0.0);
    // unknowns m_1..m_{n-2}; rows i = 1..n-2 of the usual system
    const std::size_t k = n - 2;
    std::vector<double> lo(k), di(k), up(k), rhs(k);
    for (std::size_t r = 0; r < k; ++r) {
      std::size_t i = r + 1;
      double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      lo[r] = h0 / 6.0;
      di[r] = (h0 + h1) / 3.0;
      up[r] = h1 / 6.0;
      rhs[r] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    // m_0 = m_1 + (m_1 - m_2) h_0 / h_1, and symmetrically at the far end
    double h0 = x_[1] - x_[0], h1 = x_[2] - x_[1];
    double e0 = 1.0 + h0 / h1, f0 = -h0 / h1;
    di[0] += lo[0] * e0;
    up[0] += lo[0] * f0;
    double hn = x_[n - 1] - x_[n - 2], hm = x_[n - 2] - x_[n - 3];
    double en = 1.0 + hn / hm, fn = -hn / hm;
    di[k - 1] += up[k - 1] * en;
    lo[k - 1] += up[k - 1] * fn;
    for (std::size_t r = 1; r < k; ++r) {
      double w = lo[r] / di[r - 1];
      di[r] -= w * up[r - 1];
      rhs[r] -= w * rhs[r - 1];
    }
    m_[k] = rhs[k - 1] / di[k - 1];
    for (std::size_t r = k - 1; r-- > 0;) m_[r + 1] = (rhs[r] - up[r] * m_[r + 2]) / di[r];
    m_[0] = e0 * m_[1] + f0 * m_[2];
    m_[n - 1] = en * m_[n - 2] + fn * m_[n - 3];
  }

  // value, first and second derivative
  void eval(double t, double& f, double& df, double& d2f) const {
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double a = (x_[i + 1] - t) / h, b = (t - x_[i]) / h;
    f = a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    df = (y_[i + 1] - y_[i]) / h + (-(3 * a * a - 1) * m_[i] + (3 * b * b - 1) * m_[i + 1]) * h / 6.0;
    d2f = a * m_[i] + b * m_[i + 1];
  }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& second_derivs() const { return m_; }

 private:
  std::size_t segment(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    return std::min(i, x_.size() - 2);
  }
  std::vector<double> x_, y_, m_;
};

// Double-well potential W with surface tension Phi and volume potential V = Phi^{(n+1)/n}.
// The default is W(t) = 36 t^2 (1-t)^2, for which Phi(t) = 3t^2 - 2t^3 in closed form.
class Potential {
 public:
  static constexpr double kDomainTol = 1e-12;

  explicit Potential(int n = 1) : n_(n) {
    if (n < 1) throw std::invalid_argument("dimension n must be >= 1");
  }

  // Tabulated W on [0,1]; rescaled so that the integral of sqrt(W) equals one.
  static Potential from_table(std::vector<double> t, std::vector<double> w, int n) {
    Potential p(n);
    if (t.size() < 4) throw std::invalid_argument("potential table needs at least 4 rows");
    if (std::abs(t.front()) > 1e-12 || std::abs(t.back() - 1.0) > 1e-12)
      throw std::invalid_argument("potential table must span t in [0,1]");
    for (double x : w)
      if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("potential table has negative or non-finite W");
    auto tab = std::make_shared<Table>();
    tab->spline = CubicSpline(t, w);
    auto sqrtw = [&](double s) {
      double f, df, d2;
      tab->spline.eval(s, f, df, d2);
      return std::sqrt(std::max(f, 0.0));
    };
    double norm = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) norm += integrate(sqrtw, t[i], t[i + 1], 1e-14, 4);
    if (!(norm > 0.0)) throw std::invalid_argument("potential table integrates to zero");
    for (double& x : w) x /= norm * norm;
    tab->spline = CubicSpline(t, w);
    // Phi on a dense table, filled by adaptive quadrature between nodes; evaluated by cubic
    // Hermite interpolation using the exact derivative sqrt(W).
    const int N = kPhiNodes;
    tab->phi.assign(N + 1, 0.0);
    tab->dphi.assign(N + 1, 0.0);
    for (int k = 0; k <= N; ++k) tab->dphi[k] = sqrtw(static_cast<double>(k) / N);
    for (int k = 0; k < N; ++k)
      tab->phi[k + 1] = tab->phi[k] + integrate(sqrtw, static_cast<double>(k) / N, static_cast<double>(k + 1) / N, 1e-16, 1);
    double total = tab->phi[N];
    for (double& x : tab->phi) x /= total;
    for (double& x : tab->dphi) x /= total;
    double mx = 0.0;
    for (double m : tab->spline.second_derivs()) mx = std::max(mx, std::abs(m));
    tab->max_w2 = mx;
    p.table_ = tab;
    return p;
  }

  // CSV with a header row and columns t,W.
  static Potential load_csv(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open potential table " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("potential table is empty");
    std::vector<double> t, w;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double a, b;
      if (!(ss >> a >> b))
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected two numbers");
      t.push_back(a);
      w.push_back(b);
    }
    return from_table(std::move(t), std::move(w), n);
  }

  int n() const { return n_; }
  double well_coefficient() const { return 36.0; }
  bool is_default() const { return !table_; }

  ValueDeriv W(double t) const {
    t = check(t);
    if (!table_) {
      double s = 1.0 - t;
      return {36.0 * t * t * s * s, 72.0 * t * s * (1.0 - 2.0 * t)};
    }
    double f, df, d2;
    table_->spline.eval(t, f, df, d2);
    return {std::max(f, 0.0), df};
  }

  double W2(double t) const {
    t = check(t);
    if (!table_) return 72.0 * (1.0 - 6.0 * t + 6.0 * t * t);
    double f, df, d2;
    table_->spline.eval(t, f, df, d2);
    return d2;
  }

  // Upper bound for |W''| on [0,1].
  double max_W2() const { return table_ ? table_->max_w2 : 72.0; }

  double sqrtW(double t) const {
    t = check(t);
    if (!table_) return 6.0 * t * (1.0 - t);
    return std::sqrt(W(t).value);
  }

  double Phi(double t) const {
    t = check(t);
    if (!table_) return t * t * (3.0 - 2.0 * t);
    const int N = kPhiNodes;
    double x = t * N;
    int k = std::min(static_cast<int>(x), N - 1);
    double s = x - k, d = 1.0 / N;
    double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * table_->phi[k] + h10 * d * table_->dphi[k] + h01 * table_->phi[k + 1] +
           h11 * d * table_->dphi[k + 1];
  }

  // Phi by direct adaptive quadrature; slow, used for validation.
  double Phi_quadrature(double t) const {
    t = check(t);
    return integrate([this](double s) { return sqrtW(s); }, 0.0, t, 1e-13);
  }

  ValueDeriv V(double t) const {
    double phi = Phi(t);
    double sw = sqrtW(t);
    if (n_ == 1) return {phi * phi, 2.0 * phi * sw};
    double e = static_cast<double>(n_ + 1) / n_;
    double p1 = std::pow(phi, 1.0 / n_);
    return {p1 * phi, e * p1 * sw};
  }

  // Inverse of Phi on [0,1] by bisection.
  double Phi_inverse(double y) const {
    if (y <= 0.0) return 0.0;
    if (y >= 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
      double m = 0.5 * (lo + hi);
      (Phi(m) < y ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
  }

 private:
  static constexpr int kPhiNodes = 4096;

  struct Table {
    CubicSpline spline;
    std::vector<double> phi, dphi;
    double max_w2 = 0.0;
  };

  static double check(double t) {
    if (!(t >= -kDomainTol && t <= 1.0 + kDomainTol))
      throw std::domain_error("potential argument outside [0,1]: " + std::to_string(t));
    return std::clamp(t, 0.0, 1.0);
  }

  int n_;
  std::shared_ptr<const Table> table_;
};

}  // namespace plateau
