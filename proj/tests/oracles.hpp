#pragma once
// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the routine it is checking.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "moodscope/classify.hpp"
#include "moodscope/gp.hpp"
#include "moodscope/hmm.hpp"
#include "moodscope/random.hpp"

namespace oracle {

/// U of the first sample by direct pair counting (ties count one half).
inline double pair_count_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

/// Number of rank arrangements with statistic u for untied samples, via
/// f(m, n, u) = f(m - 1, n, u - n) + f(m, n - 1, u).
class UCounts {
 public:
  std::uint64_t operator()(int m, int n, int u) {
    if (u < 0 || u > m * n) return 0;
    if (m == 0 || n == 0) return u == 0 ? 1 : 0;
    const auto key = std::tuple{m, n, u};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const auto v = (*this)(m - 1, n, u - n) + (*this)(m, n - 1, u);
    memo_[key] = v;
    return v;
  }

  /// Two-sided exact p, doubling the smaller tail.
  double p_two_sided(int m, int n, int u) {
    std::uint64_t total = 0, lower = 0, upper = 0;
    for (int k = 0; k <= m * n; ++k) {
      const auto c = (*this)(m, n, k);
      total += c;
      if (k <= u) lower += c;
      if (k >= u) upper += c;
    }
    return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total));
  }

 private:
  std::map<std::tuple<int, int, int>, std::uint64_t> memo_;
};

/// Two-sided exact p for arbitrary (possibly tied) data: every split of the
/// pooled values into groups of the original sizes, scored by pair counting.
inline double bitmask_exact_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const int n = static_cast<int>(pooled.size());
  const double observed = pair_count_u(a, b);
  std::uint64_t total = 0, lower = 0, upper = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    std::vector<double> x, y;
    for (int i = 0; i < n; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[static_cast<std::size_t>(i)]);
    const double u = pair_count_u(x, y);
    ++total;
    if (u <= observed + 1e-9) ++lower;
    if (u >= observed - 1e-9) ++upper;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total));
}

/// Joint log probability of a state path, computed directly from the model.
inline double path_log_prob(const moodscope::HmmModel& m, const std::vector<int>& obs, const std::vector<int>& path) {
  double lp = std::log(m.pi(path[0])) + std::log(m.B(path[0], obs[0]));
  for (std::size_t t = 1; t < obs.size(); ++t)
    lp += std::log(m.A(path[t - 1], path[t])) + std::log(m.B(path[t], obs[t]));
  return lp;
}

/// Best path over all 2^T candidates; ties keep the lexicographically
/// smallest path.
inline std::pair<std::vector<int>, double> brute_force_viterbi(const moodscope::HmmModel& m, const std::vector<int>& obs) {
  const auto T = obs.size();
  std::vector<int> best;
  double best_lp = -std::numeric_limits<double>::infinity();
  for (std::uint32_t code = 0; code < (1u << T); ++code) {
    std::vector<int> path(T);
    for (std::size_t t = 0; t < T; ++t) path[t] = static_cast<int>((code >> (T - 1 - t)) & 1u);
    const double lp = path_log_prob(m, obs, path);
    if (best.empty() || lp > best_lp) {
      best = path;
      best_lp = lp;
    }
  }
  return {best, best_lp};
}

inline Eigen::VectorXd random_simplex(moodscope::Rng& rng, int k, double floor = 0.02) {
  Eigen::VectorXd v(k);
  for (int i = 0; i < k; ++i) v(i) = floor + rng.uniform();
  return v / v.sum();
}

inline moodscope::HmmModel random_hmm(moodscope::Rng& rng, int states = 2, int symbols = 4) {
  moodscope::HmmModel m;
  m.pi = random_simplex(rng, states);
  m.A.resize(states, states);
  m.B.resize(states, symbols);
  for (int s = 0; s < states; ++s) {
    m.A.row(s) = random_simplex(rng, states).transpose();
    m.B.row(s) = random_simplex(rng, symbols).transpose();
  }
  return m;
}

/// Samples a sequence from a 2-state HMM; hidden states returned in `hidden`.
inline std::vector<int> sample_hmm(moodscope::Rng& rng, const Eigen::VectorXd& pi, const Eigen::MatrixXd& a,
                                   const Eigen::MatrixXd& b, int length, std::vector<int>* hidden = nullptr) {
  std::vector<int> obs;
  auto draw = [&](const Eigen::VectorXd& p) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      acc += p(i);
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size() - 1);
  };
  int h = draw(pi);
  for (int t = 0; t < length; ++t) {
    if (hidden) hidden->push_back(h);
    obs.push_back(draw(b.row(h).transpose()));
    h = draw(a.row(h).transpose());
  }
  return obs;
}

/// Central differences of the GP log marginal likelihood in log parameters.
inline Eigen::Vector3d gp_fd_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::Vector3d& p,
                                      double h = 1e-5) {
  Eigen::Vector3d g;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d up = p, down = p;
    up(i) += h;
    down(i) -= h;
    const auto fu = moodscope::log_marginal_likelihood<double>(x, y, up);
    const auto fd = moodscope::log_marginal_likelihood<double>(x, y, down);
    g(i) = (fu->value - fd->value) / (2.0 * h);
  }
  return g;
}

/// Samples y = f + noise with f ~ GP(0, SE(lengthscale, signal_variance)).
inline Eigen::VectorXd sample_gp(moodscope::Rng& rng, const Eigen::VectorXd& x, double lengthscale,
                                 double signal_variance, double noise_variance) {
  const auto n = x.size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = x(i) - x(j);
      k(i, j) = signal_variance * std::exp(-0.5 * d * d / (lengthscale * lengthscale));
    }
  k.diagonal().array() += 1e-8;
  const Eigen::MatrixXd l = k.llt().matrixL();
  Eigen::VectorXd z(n), e(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
  for (Eigen::Index i = 0; i < n; ++i) e(i) = rng.normal() * std::sqrt(noise_variance);
  return l * z + e;
}

/// Mean logistic loss by direct summation, for finite differencing.
inline double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& theta) {
  const auto p = x.cols();
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double z = x.row(i).dot(theta.head(p)) + theta(p);
    const double prob = 1.0 / (1.0 + std::exp(-z));
    total += -(y(i) * std::log(prob) + (1.0 - y(i)) * std::log(1.0 - prob));
  }
  return total / static_cast<double>(x.rows());
}

inline Eigen::VectorXd logistic_fd_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& theta, double h = 1e-6) {
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Eigen::VectorXd up = theta, down = theta;
    up(i) += h;
    down(i) -= h;
    g(i) = (logistic_objective(x, y, up) - logistic_objective(x, y, down)) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

}  // namespace oracle
