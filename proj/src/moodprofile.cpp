#include "moodscope/moodprofile.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "moodscope/csv.hpp"

namespace moodscope {

namespace {

void check_config(int series_length, const WindowConfig& config) {
  if (config.d < 1 || config.s < 1) throw std::invalid_argument("window size and slide must be >= 1");
  if (series_length < 1) throw std::invalid_argument("series length must be >= 1");
  if (config.mode == WindowMode::FullOnly && series_length < config.d)
    throw std::invalid_argument("series of " + std::to_string(series_length) + " days is shorter than one " +
                                std::to_string(config.d) + "-day window");
}

std::string window_tag(int k, int width) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "w%0*d", width, k);
  return buf;
}

}  // namespace

std::vector<Window> windows(int series_length, const WindowConfig& config) {
  check_config(series_length, config);
  std::vector<Window> out;
  for (int start = 0;; start += config.s) {
    if (config.mode == WindowMode::TruncateTail) {
      if (start >= series_length) break;
      out.push_back({start, std::min(start + config.d, series_length)});
    } else {
      if (start + config.d > series_length) break;
      out.push_back({start, start + config.d});
    }
  }
  return out;
}

int window_count(int series_length, const WindowConfig& config) {
  check_config(series_length, config);
  if (config.mode == WindowMode::TruncateTail) return (series_length + config.s - 1) / config.s;
  return (series_length - config.d) / config.s + 1;
}

std::string_view window_mood_name(WindowMood m) {
  switch (m) {
    case WindowMood::Positive: return "positive";
    case WindowMood::Negative: return "negative";
    case WindowMood::Neutral: return "neutral";
    case WindowMood::Silence: return "silence";
    case WindowMood::Mixed: return "mixed";
  }
  return "?";
}

WindowMood modal_mood(const std::array<int, kSymbolCount>& counts) {
  const int best = *std::max_element(counts.begin(), counts.end());
  int n_modal = 0;
  int modal = 0;
  for (int i = 0; i < kSymbolCount; ++i) {
    if (counts[static_cast<std::size_t>(i)] == best) {
      ++n_modal;
      modal = i;
    }
  }
  if (n_modal == 1) return static_cast<WindowMood>(modal);
  if (counts[static_cast<std::size_t>(index_of(MoodSymbol::Neutral))] == best) return WindowMood::Neutral;
  return WindowMood::Mixed;
}

double imputation_mean(const DailySeries& series) {
  double sum = 0.0;
  int n = 0;
  for (const auto& day : series.days) {
    if (day.value) {
      sum += *day.value;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

Eigen::VectorXd mood_mu(const DailySeries& series, const WindowConfig& config) {
  const auto ws = windows(series.length(), config);
  const double fill = imputation_mean(series);
  Eigen::VectorXd out(static_cast<Eigen::Index>(ws.size()));
  for (std::size_t k = 0; k < ws.size(); ++k) {
    double sum = 0.0;
    for (int off = ws[k].begin; off < ws[k].end; ++off) {
      const auto& v = series.at_offset(off).value;
      sum += v ? *v : fill;
    }
    out(static_cast<Eigen::Index>(k)) = sum / ws[k].size();
  }
  return out;
}

std::vector<WindowMood> mood_omega(const DailySeries& series, const WindowConfig& config) {
  const auto ws = windows(series.length(), config);
  std::vector<WindowMood> out;
  out.reserve(ws.size());
  for (const auto& w : ws) {
    std::array<int, kSymbolCount> counts{};
    for (int off = w.begin; off < w.end; ++off) ++counts[static_cast<std::size_t>(index_of(series.at_offset(off).symbol))];
    out.push_back(modal_mood(counts));
  }
  return out;
}

Eigen::VectorXd momentum(const Eigen::Ref<const Eigen::VectorXd>& m_mu) {
  if (m_mu.size() < 2) throw std::invalid_argument("momentum needs at least two windows");
  const auto n = m_mu.size() - 1;
  return m_mu.head(n) - m_mu.tail(n);
}

Eigen::Matrix4d transition_counts(std::span<const MoodSymbol> chronological) {
  Eigen::Matrix4d counts = Eigen::Matrix4d::Zero();
  for (std::size_t i = 1; i < chronological.size(); ++i)
    counts(index_of(chronological[i - 1]), index_of(chronological[i])) += 1.0;
  return counts;
}

Eigen::Matrix4d row_normalize(const Eigen::Matrix4d& counts, double laplace) {
  Eigen::Matrix4d out = counts.array() + laplace;
  for (int r = 0; r < 4; ++r) {
    const double total = out.row(r).sum();
    if (total > 0.0)
      out.row(r) /= total;
    else
      out.row(r).setZero();
  }
  return out;
}

TransitionRep transition_rep(const DailySeries& series, const TransitionOptions& options) {
  const auto ws = windows(series.length(), {options.d, options.s, WindowMode::FullOnly});
  TransitionRep rep;
  rep.tr.resize(static_cast<Eigen::Index>(ws.size()), 16);
  std::vector<MoodSymbol> chunk;
  for (std::size_t k = 0; k < ws.size(); ++k) {
    chunk.clear();
    // Offsets count backwards; walk from the oldest day to the newest.
    for (int off = ws[k].end - 1; off >= ws[k].begin; --off) chunk.push_back(series.at_offset(off).symbol);
    const Eigen::Matrix4d probs = row_normalize(transition_counts(chunk), options.laplace);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) rep.tr(static_cast<Eigen::Index>(k), a * 4 + b) = probs(a, b);
  }
  const auto n = rep.tr.rows();
  rep.d_tr = n > 1 ? Eigen::MatrixXd(rep.tr.topRows(n - 1) - rep.tr.bottomRows(n - 1)) : Eigen::MatrixXd(0, 16);
  return rep;
}

MoodProfile build_profile(const DailySeries& series, const WindowConfig& config,
                          const TransitionOptions& transition_options) {
  MoodProfile p;
  p.user_id = series.user_id;
  p.config = config;
  p.m_mu = mood_mu(series, config);
  p.m_omega = mood_omega(series, config);
  p.momentum = p.m_mu.size() >= 2 ? momentum(p.m_mu) : Eigen::VectorXd(0);
  p.transitions = transition_rep(series, transition_options);
  return p;
}

std::vector<std::string> profile_columns(int series_length, const WindowConfig& config,
                                         const TransitionOptions& transition_options) {
  const int w = window_count(series_length, config);
  const int tw = window_count(series_length, {transition_options.d, transition_options.s, WindowMode::FullOnly});
  std::vector<std::string> cols;
  for (int k = 0; k < w; ++k) cols.push_back("m_mu_" + window_tag(k, 3));
  for (int k = 0; k < w; ++k) cols.push_back("m_omega_" + window_tag(k, 3));
  for (int k = 0; k + 1 < w; ++k) cols.push_back("d_m_" + window_tag(k, 3));
  for (const char* prefix : {"tr_", "d_tr_"}) {
    const int rows = std::string(prefix) == "tr_" ? tw : tw - 1;
    for (int k = 0; k < rows; ++k)
      for (auto a : kAllSymbols)
        for (auto b : kAllSymbols)
          cols.push_back(std::string(prefix) + window_tag(k, 2) + "_" + std::string(symbol_tag(a)) + "_" +
                         std::string(symbol_tag(b)));
  }
  return cols;
}

void write_profiles_csv(std::ostream& out, std::span<const MoodProfile> profiles, int series_length,
                        const TransitionOptions& transition_options) {
  if (profiles.empty()) return;
  std::vector<std::string> header{"user_id"};
  for (auto& c : profile_columns(series_length, profiles.front().config, transition_options))
    header.push_back(std::move(c));
  csv::write_row(out, header);
  for (const auto& p : profiles) {
    std::vector<std::string> row{p.user_id};
    for (Eigen::Index i = 0; i < p.m_mu.size(); ++i) row.push_back(csv::num(p.m_mu(i)));
    for (auto m : p.m_omega) row.emplace_back(window_mood_name(m));
    for (Eigen::Index i = 0; i < p.momentum.size(); ++i) row.push_back(csv::num(p.momentum(i)));
    for (const auto* m : {&p.transitions.tr, &p.transitions.d_tr})
      for (Eigen::Index r = 0; r < m->rows(); ++r)
        for (Eigen::Index c = 0; c < m->cols(); ++c) row.push_back(csv::num((*m)(r, c)));
    csv::write_row(out, row);
  }
}

WindowConfig study_config(int config_id) {
  switch (config_id) {
    case 1: return {7, 3, WindowMode::TruncateTail};
    case 2: return {14, 3, WindowMode::TruncateTail};
    case 3: return {14, 7, WindowMode::TruncateTail};
    case 4: return {30, 3, WindowMode::TruncateTail};
    case 5: return {30, 7, WindowMode::TruncateTail};
    default: throw std::out_of_range("window configuration id must be 1..5");
  }
}

}  // namespace moodscope
