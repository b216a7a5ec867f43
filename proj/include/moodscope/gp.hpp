#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "moodscope/corpus.hpp"
#include "moodscope/moodprofile.hpp"
#include "moodscope/sentiment.hpp"
#include "moodscope/stats.hpp"

namespace moodscope {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// (log lengthscale, log signal variance, log noise variance)
template <typename Scalar>
using GpLogParams = Eigen::Matrix<Scalar, 3, 1>;

/// k(a, b) = signal_variance * exp(-(a - b)^2 / (2 lengthscale^2)) over 1-D inputs.
template <typename Scalar>
MatrixX<Scalar> squared_exponential(const VectorX<Scalar>& x, Scalar lengthscale, Scalar signal_variance) {
  const auto n = x.size();
  MatrixX<Scalar> k(n, n);
  const Scalar inv = Scalar(1) / (Scalar(2) * lengthscale * lengthscale);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = signal_variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const Scalar d = x(i) - x(j);
      k(i, j) = k(j, i) = signal_variance * std::exp(-d * d * inv);
    }
  }
  return k;
}

inline constexpr double kInitialJitter = 1e-9;
inline constexpr double kMaxJitter = 1e-6;

template <typename Scalar>
struct LmlEvaluation {
  Scalar value;
  GpLogParams<Scalar> gradient;  ///< d value / d log-params
  Scalar jitter;
};

/// Log marginal likelihood of zero-mean targets under the squared-exponential
/// kernel plus noise, with its gradient in log-parameter space. Jitter starts
/// at 1e-9 and grows tenfold up to 1e-6 while the Cholesky factorization
/// fails; returns nullopt if it never succeeds.
template <typename Scalar>
std::optional<LmlEvaluation<Scalar>> log_marginal_likelihood(const VectorX<Scalar>& x, const VectorX<Scalar>& y,
                                                             const GpLogParams<Scalar>& log_params) {
  const Scalar lengthscale = std::exp(log_params(0));
  const Scalar signal = std::exp(log_params(1));
  const Scalar noise = std::exp(log_params(2));
  const auto n = x.size();
  const MatrixX<Scalar> k_se = squared_exponential<Scalar>(x, lengthscale, signal);

  for (Scalar jitter = Scalar(kInitialJitter); jitter <= Scalar(kMaxJitter) * Scalar(1.0001); jitter *= Scalar(10)) {
    MatrixX<Scalar> k = k_se;
    k.diagonal().array() += noise + jitter;
    Eigen::LLT<MatrixX<Scalar>> llt(k);
    if (llt.info() != Eigen::Success) continue;
    const VectorX<Scalar> alpha = llt.solve(y);
    const MatrixX<Scalar> l = llt.matrixL();
    const Scalar log_det_half = l.diagonal().array().log().sum();
    LmlEvaluation<Scalar> out;
    out.jitter = jitter;
    out.value = Scalar(-0.5) * y.dot(alpha) - log_det_half - Scalar(0.5) * Scalar(n) * std::log(Scalar(2) * Scalar(M_PI));

    // dL/dtheta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
    const MatrixX<Scalar> k_inv = llt.solve(MatrixX<Scalar>::Identity(n, n));
    const MatrixX<Scalar> w = alpha * alpha.transpose() - k_inv;
    Scalar g_len = 0, g_sig = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar d = x(i) - x(j);
        g_len += w(i, j) * k_se(i, j) * d * d / (lengthscale * lengthscale);
        g_sig += w(i, j) * k_se(i, j);
      }
    }
    out.gradient(0) = Scalar(0.5) * g_len;
    out.gradient(1) = Scalar(0.5) * g_sig;
    out.gradient(2) = Scalar(0.5) * noise * w.trace();
    return out;
  }
  return std::nullopt;
}

struct GpHyperparameters {
  double lengthscale = 1.0;
  double signal_variance = 1.0;
  double noise_variance = 0.1;
};

struct GpFit {
  std::string user_id;
  bool excluded = false;
  Eigen::VectorXd inputs;
  Eigen::VectorXd targets;
  GpHyperparameters hyper;
  double log_marginal_likelihood = 0.0;
  /// Lengthscale at a bound or signal variance collapsed: no usable structure.
  bool degenerate = false;
};

struct GpFitOptions {
  std::vector<double> lengthscale_starts{0.5, 2.0, 8.0, 32.0, 100.0};
  double min_lengthscale = 0.1;
  double max_lengthscale = 100.0;
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
};

/// Maximizes the log marginal likelihood of the mean-centred targets from
/// each lengthscale start with a box-constrained BFGS in log space and keeps
/// the best result. Throws on non-finite targets, fewer than two points, or
/// when every start fails.
GpFit fit_lengthscale(const Eigen::VectorXd& inputs, const Eigen::VectorXd& targets, const GpFitOptions& options = {});

/// Log marginal likelihood at every multi-start initialization, in start order.
std::vector<double> start_log_likelihoods(const Eigen::VectorXd& inputs, const Eigen::VectorXd& targets,
                                          const GpFitOptions& options = {});

inline constexpr int kMinGpPosts = 10;

struct GpInputs {
  Eigen::VectorXd inputs;   ///< window indices 0..W-1
  Eigen::VectorXd targets;  ///< windowed mean mood
};

/// Users with fewer than 10 posts are excluded (nullopt); otherwise the
/// windowed mean mood under `config` (default d = 14, s = 3).
std::optional<GpInputs> gp_inputs(const UserTimeline& timeline, const DailySeries& series,
                                  const WindowConfig& config = {14, 3, WindowMode::TruncateTail});

struct GroupPair {
  Ternary first;
  Ternary second;
  MannWhitneyResult test;  ///< U is the statistic of `first`
};

struct GroupComparison {
  std::map<Ternary, double> median_lengthscale;
  std::map<Ternary, std::size_t> group_size;
  std::vector<GroupPair> pairs;
};

/// Pairwise Mann-Whitney tests of lengthscales between the symptom bands
/// present among the included fits.
GroupComparison compare_groups(std::span<const GpFit> fits, std::span<const Ternary> labels);

}  // namespace moodscope
