#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "moodscope/sentiment.hpp"
#include "moodscope/types.hpp"

namespace moodscope {

enum class WindowMode {
  TruncateTail,  ///< windows start every s days while start < T; the oldest ones may be short
  FullOnly,      ///< only windows that fit entirely inside the series
};

struct WindowConfig {
  int d = 14;  ///< window size in days
  int s = 3;   ///< slide increment in days
  WindowMode mode = WindowMode::TruncateTail;
};

/// Day offsets [begin, end) counted backwards from the survey: offset 0 is
/// the day before the survey. Window 0 is the most recent.
struct Window {
  int begin = 0;
  int end = 0;
  int size() const { return end - begin; }
  friend bool operator==(const Window&, const Window&) = default;
};

std::vector<Window> windows(int series_length, const WindowConfig& config);

/// Closed form of windows(...).size().
int window_count(int series_length, const WindowConfig& config);

/// Windowed modal mood; Mixed when several non-neutral states tie for the mode.
enum class WindowMood : std::uint8_t { Positive = 0, Negative = 1, Neutral = 2, Silence = 3, Mixed = 4 };

std::string_view window_mood_name(WindowMood m);

WindowMood modal_mood(const std::array<int, kSymbolCount>& counts);

/// Mean of V over the user's posting days, or 0 when the user never posted.
double imputation_mean(const DailySeries& series);

/// Windowed mean of V with silence days imputed by the user's mean.
Eigen::VectorXd mood_mu(const DailySeries& series, const WindowConfig& config);

std::vector<WindowMood> mood_omega(const DailySeries& series, const WindowConfig& config);

/// momentum(k) = m_mu(k) - m_mu(k + 1); window k + 1 is the earlier one.
Eigen::VectorXd momentum(const Eigen::Ref<const Eigen::VectorXd>& m_mu);

/// Counts of consecutive-day transitions, row = earlier day, column = next day.
Eigen::Matrix4d transition_counts(std::span<const MoodSymbol> chronological);

/// Row-normalizes counts; rows without outgoing transitions stay all-zero
/// unless `laplace` > 0 adds that pseudo-count to every cell.
Eigen::Matrix4d row_normalize(const Eigen::Matrix4d& counts, double laplace = 0.0);

struct TransitionOptions {
  int d = 30;
  int s = 30;
  double laplace = 0.0;
};

/// Tr has one row per full window (most recent first) with the 4x4 table
/// flattened row-major; d_tr(k) = tr(k) - tr(k + 1).
struct TransitionRep {
  Eigen::MatrixXd tr;
  Eigen::MatrixXd d_tr;
};

TransitionRep transition_rep(const DailySeries& series, const TransitionOptions& options = {});

struct MoodProfile {
  std::string user_id;
  WindowConfig config;
  Eigen::VectorXd m_mu;
  std::vector<WindowMood> m_omega;
  Eigen::VectorXd momentum;
  TransitionRep transitions;
};

MoodProfile build_profile(const DailySeries& series, const WindowConfig& config,
                          const TransitionOptions& transition_options = {});

/// Column names for a profile export: m_mu_w000.., m_omega_w000.., d_m_w000..,
/// tr_w00_P_N.., d_tr_w00_P_N..
std::vector<std::string> profile_columns(int series_length, const WindowConfig& config,
                                         const TransitionOptions& transition_options = {});

void write_profiles_csv(std::ostream& out, std::span<const MoodProfile> profiles, int series_length,
                        const TransitionOptions& transition_options = {});

/// The five window configurations compared in the classification study,
/// indexed 1..5: (7,3), (14,3), (14,7), (30,3), (30,7).
WindowConfig study_config(int config_id);

}  // namespace moodscope
