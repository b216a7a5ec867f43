#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "moodscope/types.hpp"

namespace moodscope {

struct MannWhitneyResult {
  double u = 0.0;  ///< statistic of the first sample
  double p_two_sided = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool tie_correction_applied = false;
  bool exact = false;
};

/// Pooled sample size at or below which p-values come from full enumeration.
inline constexpr std::size_t kExactMannWhitneyLimit = 12;

/// Two-sided Mann-Whitney U test. U counts pairs (a from sample1, b from
/// sample2) with a > b, plus one half per tie, computed from midrank sums.
/// For n1 + n2 <= 12 the null distribution is enumerated over all label
/// assignments of the observed midranks; otherwise the normal approximation
/// with tie-corrected variance and a 0.5 continuity correction is used.
MannWhitneyResult mann_whitney_u(std::span<const double> sample1, std::span<const double> sample2);

/// Normal-approximation p-value, exposed for comparison against the exact path.
double mann_whitney_normal_p(std::span<const double> sample1, std::span<const double> sample2);

/// Midranks (1-based, ties averaged) of the values in input order.
std::vector<double> midranks(std::span<const double> values);

/// Precision/recall/F1 indexed by BinaryLabel (0 = Low, 1 = High).
struct ClassMetrics {
  std::array<double, 2> precision{};
  std::array<double, 2> recall{};
  std::array<double, 2> f1{};
  std::array<std::size_t, 2> support{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  bool zero_division = false;

  double precision_high() const { return precision[1]; }
  double recall_high() const { return recall[1]; }
  double f1_high() const { return f1[1]; }
};

ClassMetrics classification_metrics(std::span<const BinaryLabel> predictions, std::span<const BinaryLabel> labels);

enum class DummyKind { MostFrequent, Stratified };

/// MostFrequent predicts the modal training label (High on an exact tie);
/// Stratified draws i.i.d. labels with the training class frequencies.
std::vector<BinaryLabel> dummy_baseline(DummyKind kind, std::span<const BinaryLabel> train_labels, std::size_t n_test,
                                        std::uint64_t seed);

double median(std::vector<double> values);

}  // namespace moodscope
