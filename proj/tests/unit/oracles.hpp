// Straight-from-the-definitions reference implementations used by the tests.
// Nothing here calls into the library under test.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Small independent generator so test inputs do not depend on the library RNG.
class Lcg {
 public:
  explicit Lcg(std::uint64_t seed) : s_(seed * 2862933555777941757ULL + 3037000493ULL) {}
  std::uint64_t next() {
    s_ = s_ * 6364136223846793005ULL + 1442695040888963407ULL;
    std::uint64_t z = s_;
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    return z;
  }
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) / 9007199254740992.0; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  Eigen::MatrixXd matrix(int rows, int cols, double lo, double hi) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }
  Eigen::MatrixXd gaussian(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal();
    return m;
  }

 private:
  std::uint64_t s_;
};

// ---- dominance and Pareto gaps ------------------------------------------------------

inline bool dominates(const Eigen::MatrixXd& mu, int x, int y) {
  bool strict = false;
  for (int i = 0; i < mu.cols(); ++i) {
    if (mu(x, i) < mu(y, i)) return false;
    if (mu(x, i) > mu(y, i)) strict = true;
  }
  return strict;
}

inline std::vector<int> front(const Eigen::MatrixXd& mu) {
  std::vector<int> f;
  for (int x = 0; x < mu.rows(); ++x) {
    bool dominated = false;
    for (int y = 0; y < mu.rows(); ++y) dominated = dominated || dominates(mu, y, x);
    if (!dominated) f.push_back(x);
  }
  return f;
}

inline double m_of(const Eigen::MatrixXd& mu, int x, int y) {
  double v = kInf;
  for (int i = 0; i < mu.cols(); ++i) v = std::min(v, mu(y, i) - mu(x, i));
  return v;
}

inline double M_of(const Eigen::MatrixXd& mu, int x, int y) {
  double v = -kInf;
  for (int i = 0; i < mu.cols(); ++i) v = std::max(v, mu(x, i) - mu(y, i));
  return v;
}

inline double pareto_gap(const Eigen::MatrixXd& mu, int x) {
  const auto f = front(mu);
  const bool on_front = std::find(f.begin(), f.end(), x) != f.end();
  if (!on_front) {
    double g = -kInf;
    for (int y : f) g = std::max(g, m_of(mu, x, y));
    return g;
  }
  double dplus = kInf;
  for (int y : f) {
    if (y != x) dplus = std::min(dplus, std::min(M_of(mu, x, y), M_of(mu, y, x)));
  }
  double dminus = kInf;
  for (int y = 0; y < mu.rows(); ++y) {
    if (std::find(f.begin(), f.end(), y) != f.end()) continue;
    dminus = std::min(dminus, std::max(M_of(mu, y, x), 0.0) + pareto_gap(mu, y));
  }
  return std::min(dplus, dminus);
}

// ---- constrained gaps ---------------------------------------------------------------

inline int best_feasible(const Eigen::MatrixXd& mu, double tau) {
  int best = -1;
  for (int x = 0; x < mu.rows(); ++x) {
    if (mu(x, 1) >= tau && (best < 0 || mu(x, 0) > mu(best, 0))) best = x;
  }
  return best;
}

inline double constrained_gap(const Eigen::MatrixXd& mu, double tau, int x) {
  const int s = best_feasible(mu, tau);
  if (x == s) return 0.0;
  const double viol = std::max(tau - mu(x, 1), 0.0);
  const double subopt = mu(s, 0) - mu(x, 0);
  return std::min(std::max(viol, subopt), mu(s, 1) - tau);
}

// ---- hypervolume --------------------------------------------------------------------

// Exact union area/volume on the grid induced by all coordinates: each grid cell is either
// fully covered or not.
inline double hypervolume_grid(const Eigen::MatrixXd& pts, const Eigen::VectorXd& ref) {
  const int m = static_cast<int>(pts.cols());
  std::vector<std::vector<double>> axes(m);
  for (int j = 0; j < m; ++j) {
    std::set<double> s{ref[j]};
    for (int i = 0; i < pts.rows(); ++i) s.insert(std::max(pts(i, j), ref[j]));
    axes[j].assign(s.begin(), s.end());
  }
  double total = 0.0;
  std::vector<std::size_t> idx(m, 0);
  std::function<void(int)> rec;
  std::vector<double> lo(m), hi(m);
  rec = [&](int dim) {
    if (dim == m) {
      for (int i = 0; i < pts.rows(); ++i) {
        bool cover = true;
        for (int j = 0; j < m && cover; ++j) cover = std::max(pts(i, j), ref[j]) >= hi[j];
        if (cover) {
          double v = 1.0;
          for (int j = 0; j < m; ++j) v *= hi[j] - lo[j];
          total += v;
          return;
        }
      }
      return;
    }
    for (std::size_t k = 0; k + 1 < axes[dim].size(); ++k) {
      lo[dim] = axes[dim][k];
      hi[dim] = axes[dim][k + 1];
      rec(dim + 1);
    }
  };
  rec(0);
  return total;
}

// ---- G-optimal design by Frank-Wolfe (Fedorov-Wynn steps) on the log-det dual ---------

inline double g_value(const Eigen::MatrixXd& phi, const Eigen::VectorXd& w) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(phi.cols(), phi.cols());
  for (int i = 0; i < phi.rows(); ++i) a += w[i] * phi.row(i).transpose() * phi.row(i);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-10);
  const Eigen::MatrixXd ainv = cod.pseudoInverse();
  double g = 0.0;
  for (int i = 0; i < phi.rows(); ++i) g = std::max(g, phi.row(i).dot(ainv * phi.row(i).transpose()));
  return g;
}

inline double frank_wolfe_g(const Eigen::MatrixXd& phi, int iters = 200000, double tol = 1e-6) {
  const int k = static_cast<int>(phi.rows());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi);
  const double smax = svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i) rank += svd.singularValues()(i) > 1e-9 * std::max(1.0, smax);
  double best = g_value(phi, w);
  for (int t = 0; t < iters; ++t) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(phi.cols(), phi.cols());
    for (int i = 0; i < k; ++i) a += w[i] * phi.row(i).transpose() * phi.row(i);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    cod.setThreshold(1e-10);
    const Eigen::MatrixXd ainv = cod.pseudoInverse();
    int arg = 0;
    double gmax = -1.0;
    for (int i = 0; i < k; ++i) {
      const double v = phi.row(i).dot(ainv * phi.row(i).transpose());
      if (v > gmax) gmax = v, arg = i;
    }
    best = std::min(best, gmax);
    if (gmax <= rank * (1.0 + tol)) break;
    const double step = (gmax / rank - 1.0) / (gmax - 1.0);
    w *= (1.0 - step);
    w[arg] += step;
  }
  return best;
}

// ---- eigen-decomposition by power iteration with deflation ----------------------------

inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> power_deflation(Eigen::MatrixXd a, int count) {
  const int n = static_cast<int>(a.rows());
  Eigen::VectorXd values(count);
  Eigen::MatrixXd vectors(n, count);
  for (int c = 0; c < count; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i) v[i] += 0.01 * (i + 1) * (c + 1);
    for (int j = 0; j < c; ++j) v -= vectors.col(j).dot(v) * vectors.col(j);
    double lambda = 0.0;
    for (int it = 0; it < 20000; ++it) {
      Eigen::VectorXd next = a * v;
      for (int j = 0; j < c; ++j) next -= vectors.col(j).dot(next) * vectors.col(j);
      const double norm = next.norm();
      if (norm < 1e-300) break;
      next /= norm;
      const double diff = (next - v).norm();
      v = next;
      lambda = v.dot(a * v);
      if (diff < 1e-14) break;
    }
    values[c] = lambda;
    vectors.col(c) = v;
    a -= lambda * v * v.transpose();
  }
  return {values, vectors};
}

// ---- statistics ---------------------------------------------------------------------

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double ci_half_width(const std::vector<double>& v) {
  const double mu = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return 1.96 * std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) / std::sqrt(static_cast<double>(v.size()));
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
