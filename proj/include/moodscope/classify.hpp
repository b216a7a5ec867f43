#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "moodscope/corpus.hpp"
#include "moodscope/moodprofile.hpp"
#include "moodscope/sentiment.hpp"
#include "moodscope/stats.hpp"
#include "moodscope/textfeat.hpp"

namespace moodscope {

enum class Penalty { L1, L2 };

std::string_view penalty_name(Penalty p);
std::optional<Penalty> parse_penalty(std::string_view text);

template <typename Scalar>
struct LogisticLoss {
  Scalar value;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad_weights;
  Scalar grad_intercept;
};

/// Mean logistic loss over rows of X with 0/1 targets, and its gradient.
template <typename Scalar>
LogisticLoss<Scalar> logistic_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& x,
                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                                   const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights, Scalar intercept) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Vec z = (x * weights).array() + intercept;
  const Scalar n = Scalar(x.rows());
  Scalar total = 0;
  Vec residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const Scalar zi = z(i);
    // softplus(z) - y z, evaluated without overflow
    const Scalar softplus = zi > 0 ? zi + std::log1p(std::exp(-zi)) : std::log1p(std::exp(zi));
    total += softplus - y(i) * zi;
    const Scalar p = zi >= 0 ? Scalar(1) / (Scalar(1) + std::exp(-zi)) : std::exp(zi) / (Scalar(1) + std::exp(zi));
    residual(i) = p - y(i);
  }
  return {total / n, x.transpose() * residual / n, residual.sum() / n};
}

/// Mean logistic loss + (1/C) * penalty, with penalty = 0.5 ||w||^2 (L2) or
/// ||w||_1 (L1); the intercept is not penalized.
double regularized_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                             double intercept, Penalty penalty, double c);

struct LogRegModel {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;

  Eigen::VectorXd decision(const Eigen::MatrixXd& x) const { return (x * weights).array() + intercept; }
  std::vector<BinaryLabel> predict(const Eigen::MatrixXd& x) const;
};

struct LogRegOptions {
  double tolerance = 1e-6;
  int max_iterations = 5000;
  int lbfgs_memory = 10;
};

/// Fits from zero. L2 uses limited-memory BFGS with Armijo backtracking until
/// the gradient norm falls below the tolerance; L1 uses accelerated proximal
/// gradient until the gradient-mapping norm does.
LogRegModel train_logreg(const Eigen::MatrixXd& x, std::span<const BinaryLabel> labels, Penalty penalty, double c,
                         const LogRegOptions& options = {});

/// Column centring and scaling fitted on training rows only. Constant columns
/// map to zero.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows);

template <typename T>
std::vector<T> select(std::span<const T> values, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(values[r]);
  return out;
}

/// Downsamples the majority class to the minority size; returns ascending
/// row indices.
std::vector<std::size_t> balance_subsample(std::span<const BinaryLabel> labels, std::uint64_t seed);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class, floor(test_fraction * n) rows (at least one, at most n - 1) go
/// to the test side.
Split split_stratified(std::span<const BinaryLabel> labels, double test_fraction, std::uint64_t seed);

/// Fold id for every row; each class is dealt round-robin across the folds.
std::vector<int> stratified_folds(std::span<const BinaryLabel> labels, int folds, std::uint64_t seed);

struct GridPoint {
  Penalty penalty = Penalty::L2;
  double c = 1.0;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

/// Penalty in {l1, l2} x C in {0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.5, 2.0}.
std::vector<GridPoint> default_grid();

struct GridScore {
  GridPoint point;
  std::vector<double> fold_macro_f1;
  double mean_macro_f1 = 0.0;
};

struct GridResult {
  GridPoint best;
  std::vector<GridScore> scores;
};

/// Stratified k-fold search maximizing mean validation macro-F1. Ties go to
/// the smaller C, then L2 before L1. Standardization is refitted on every
/// fold's training part.
GridResult grid_search_cv(const Eigen::MatrixXd& x, std::span<const BinaryLabel> labels, std::span<const GridPoint> grid,
                          int folds, std::uint64_t seed, int jobs = 1, const LogRegOptions& options = {});

struct FeatureBlock {
  std::string name;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  ///< users x columns
};

/// Column blocks aligned on the same user rows.
class FeatureMatrix {
 public:
  void add(FeatureBlock block);
  const FeatureBlock& block(std::string_view name) const;
  bool has(std::string_view name) const;
  Eigen::Index rows() const { return rows_; }
  Eigen::MatrixXd assemble(std::span<const std::string> names) const;
  std::vector<std::string> columns(std::span<const std::string> names) const;

 private:
  std::vector<FeatureBlock> blocks_;
  Eigen::Index rows_ = -1;
};

inline constexpr std::string_view kBasicBlock = "B";
inline constexpr std::string_view kMoodMuBlock = "M_mu";
inline constexpr std::string_view kMomentumBlock = "dM";
inline constexpr std::string_view kTransitionBlock = "Tr";
inline constexpr std::string_view kTransitionMomentumBlock = "dTr";

/// Named block set: "B", "B+M_mu", "B+dM", "B+Tr", "B+dTr" or "All"
/// (B + M_mu + dM + Tr, i.e. everything except dTr).
std::vector<std::string> block_set(std::string_view name);
std::vector<std::string> default_block_sets();

struct BasicFeatureOptions {
  std::size_t ngrams = 1500;
  int max_n = 3;
  int topics = 30;
  int lda_iterations = 1000;
  std::uint64_t seed = 0;
};

/// Per-user document: every post text joined with newlines.
std::vector<std::string> user_documents(std::span<const UserTimeline> timelines);

/// n-gram frequencies, LDA topic proportions, category proportions and word
/// count, as one "B" block.
FeatureBlock build_basic_block(std::span<const std::string> documents, const BasicFeatureOptions& options,
                               const CategoryLexicon* categories = nullptr);

/// M_mu, dM, Tr and dTr blocks for one window configuration.
std::vector<FeatureBlock> build_mood_blocks(std::span<const DailySeries> series, const WindowConfig& config);

struct AblationInput {
  std::vector<DailySeries> series;
  std::vector<BinaryLabel> labels;
  FeatureBlock basic;
};

struct AblationOptions {
  std::vector<int> config_ids{1, 2, 3, 4, 5};
  std::vector<std::string> block_sets = default_block_sets();
  std::vector<GridPoint> grid = default_grid();
  int folds = 5;
  double test_fraction = 0.2;
  bool balance = true;
  std::uint64_t seed = 0;
  int jobs = 1;
  LogRegOptions logreg;
};

struct ReportRow {
  int config_id = 0;
  WindowConfig config;
  std::string blocks;
  GridPoint chosen;
  std::vector<double> fold_macro_f1;
  std::size_t n_features = 0;
  ClassMetrics test;
  LogRegModel model;
  Standardizer scaler;
  std::vector<std::string> columns;

  double mean_cv_macro_f1() const;
};

struct ModelReport {
  std::vector<ReportRow> rows;
  ClassMetrics most_frequent;
  ClassMetrics stratified;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::vector<std::string> notes;
};

/// Balances (optionally), splits once, then for every configuration and
/// block set grid-searches on the training part and scores the chosen model
/// on the held-out part.
ModelReport ablation_report(const AblationInput& input, const AblationOptions& options);

/// Columns: config,blocks,penalty,C,precision_high,recall_high,f1_high,macro_f1
void write_report_csv(std::ostream& out, const ModelReport& report);

nlohmann::json model_to_json(const LogRegModel& model, std::span<const std::string> columns, const Standardizer& scaler);

}  // namespace moodscope
