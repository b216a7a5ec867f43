#include "moodscope/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "moodscope/random.hpp"

namespace moodscope {

namespace {

// Relative slack when comparing enumerated statistics with the observed one;
// midrank sums are multiples of 0.5, so anything far below that is safe.
constexpr double kStatEpsilon = 1e-9;

struct RankSummary {
  double u = 0.0;
  double tie_term = 0.0;  // sum over tie groups of t^3 - t
  std::vector<double> pooled_ranks;
};

RankSummary summarize(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  RankSummary s;
  s.pooled_ranks = midranks(pooled);
  double r1 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r1 += s.pooled_ranks[i];
  const double n1 = static_cast<double>(a.size());
  s.u = r1 - n1 * (n1 + 1.0) / 2.0;

  std::sort(pooled.begin(), pooled.end());
  for (std::size_t i = 0; i < pooled.size();) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
    const double t = static_cast<double>(j - i);
    s.tie_term += t * t * t - t;
    i = j;
  }
  return s;
}

void check_samples(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("Mann-Whitney U needs two nonempty samples");
  for (double v : a)
    if (std::isnan(v)) throw std::invalid_argument("Mann-Whitney U: NaN in sample");
  for (double v : b)
    if (std::isnan(v)) throw std::invalid_argument("Mann-Whitney U: NaN in sample");
}

double normal_p(double u, double n1, double n2, double tie_term) {
  const double n = n1 + n2;
  const double mean = n1 * n2 / 2.0;
  double var = n1 * n2 / 12.0 * ((n + 1.0) - (n > 1.0 ? tie_term / (n * (n - 1.0)) : 0.0));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

// Enumerates every size-n1 subset of the pooled midranks.
void enumerate_rank_sums(const std::vector<double>& ranks, std::size_t start, std::size_t remaining, double partial,
                         std::vector<double>& sums) {
  if (remaining == 0) {
    sums.push_back(partial);
    return;
  }
  for (std::size_t i = start; i + remaining <= ranks.size(); ++i)
    enumerate_rank_sums(ranks, i + 1, remaining - 1, partial + ranks[i], sums);
}

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double mann_whitney_normal_p(std::span<const double> sample1, std::span<const double> sample2) {
  check_samples(sample1, sample2);
  const auto s = summarize(sample1, sample2);
  return normal_p(s.u, static_cast<double>(sample1.size()), static_cast<double>(sample2.size()), s.tie_term);
}

MannWhitneyResult mann_whitney_u(std::span<const double> sample1, std::span<const double> sample2) {
  check_samples(sample1, sample2);
  const auto s = summarize(sample1, sample2);
  MannWhitneyResult r;
  r.n1 = sample1.size();
  r.n2 = sample2.size();
  r.u = s.u;
  r.tie_correction_applied = s.tie_term > 0.0;
  const double n1 = static_cast<double>(r.n1);
  const double n2 = static_cast<double>(r.n2);

  if (r.n1 + r.n2 <= kExactMannWhitneyLimit) {
    r.exact = true;
    std::vector<double> sums;
    enumerate_rank_sums(s.pooled_ranks, 0, r.n1, 0.0, sums);
    const double offset = n1 * (n1 + 1.0) / 2.0;
    std::size_t lower = 0, upper = 0;
    for (double rank_sum : sums) {
      const double u = rank_sum - offset;
      if (u <= s.u + kStatEpsilon) ++lower;
      if (u >= s.u - kStatEpsilon) ++upper;
    }
    const double total = static_cast<double>(sums.size());
    r.p_two_sided = std::min(1.0, 2.0 * std::min(lower, upper) / total);
  } else {
    r.p_two_sided = normal_p(s.u, n1, n2, s.tie_term);
  }
  return r;
}

ClassMetrics classification_metrics(std::span<const BinaryLabel> predictions, std::span<const BinaryLabel> labels) {
  if (predictions.size() != labels.size()) throw std::invalid_argument("predictions and labels differ in length");
  ClassMetrics m;
  std::array<std::array<std::size_t, 2>, 2> confusion{};  // [truth][prediction]
  for (std::size_t i = 0; i < labels.size(); ++i)
    ++confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(predictions[i])];
  std::size_t correct = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t tp = confusion[c][c];
    const std::size_t predicted = confusion[0][c] + confusion[1][c];
    const std::size_t actual = confusion[c][0] + confusion[c][1];
    correct += tp;
    m.support[c] = actual;
    if (predicted > 0)
      m.precision[c] = static_cast<double>(tp) / static_cast<double>(predicted);
    else
      m.zero_division = true;
    if (actual > 0)
      m.recall[c] = static_cast<double>(tp) / static_cast<double>(actual);
    else
      m.zero_division = true;
    const double denom = m.precision[c] + m.recall[c];
    m.f1[c] = denom > 0.0 ? 2.0 * m.precision[c] * m.recall[c] / denom : 0.0;
  }
  m.macro_f1 = 0.5 * (m.f1[0] + m.f1[1]);
  m.accuracy = labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  return m;
}

std::vector<BinaryLabel> dummy_baseline(DummyKind kind, std::span<const BinaryLabel> train_labels, std::size_t n_test,
                                        std::uint64_t seed) {
  if (train_labels.empty()) throw std::invalid_argument("dummy baseline needs training labels");
  const auto n_high = static_cast<std::size_t>(std::count(train_labels.begin(), train_labels.end(), BinaryLabel::High));
  const auto n_low = train_labels.size() - n_high;
  if (kind == DummyKind::MostFrequent)
    return std::vector<BinaryLabel>(n_test, n_high >= n_low ? BinaryLabel::High : BinaryLabel::Low);
  Rng rng(seed);
  const double p_high = static_cast<double>(n_high) / static_cast<double>(train_labels.size());
  std::vector<BinaryLabel> out(n_test);
  for (auto& label : out) label = rng.uniform() < p_high ? BinaryLabel::High : BinaryLabel::Low;
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace moodscope
