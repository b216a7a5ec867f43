#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "moodscope/corpus.hpp"
#include "moodscope/types.hpp"

namespace moodscope {

/// Term strengths in {-5..-1, +1..+5}. A term ending in '*' is a stem and
/// matches any token it prefixes; exact terms take precedence, then the
/// longest matching stem.
class SentimentLexicon {
 public:
  void add_term(std::string term, int strength);
  void add_negation(std::string word);
  void add_booster(std::string word, int offset);

  /// Lexicon TSV is `term<TAB>strength`; negations are one word per line;
  /// boosters are `word<TAB>offset`. Blank lines and '#' comments are skipped.
  static SentimentLexicon load(const std::filesystem::path& terms,
                               const std::optional<std::filesystem::path>& negations = std::nullopt,
                               const std::optional<std::filesystem::path>& boosters = std::nullopt);

  std::optional<int> strength(std::string_view token) const;
  bool is_negation(std::string_view token) const { return negations_.count(std::string(token)) > 0; }
  std::optional<int> booster(std::string_view token) const;

  std::size_t size() const { return terms_.size() + stems_.size(); }

 private:
  std::unordered_map<std::string, int> terms_;
  std::vector<std::pair<std::string, int>> stems_;  // sorted longest first
  std::unordered_set<std::string> negations_;
  std::unordered_map<std::string, int> boosters_;
};

/// Number of preceding tokens searched for a negation word.
inline constexpr int kNegationScope = 3;

/// Scores a post with the max-positive / min-negative rule.
///
/// A sentiment term is ignored when a negation word occurs among the
/// `kNegationScope` tokens before it. A booster immediately before a term
/// moves its strength away from zero by the booster offset. Results are
/// clamped to 1..5 and -5..-1. An override is returned verbatim.
PostSentiment score_post(std::string_view text, const SentimentLexicon& lexicon,
                         const std::optional<PostSentiment>& override_score = std::nullopt);

struct DayScore {
  std::optional<double> value;
  MoodSymbol symbol = MoodSymbol::Silence;
};

/// Mean valence of one day's posts and its sign symbol; Silence when empty.
DayScore score_day(std::span<const int> valences);
DayScore score_day(std::span<const PostRecord> posts, const SentimentLexicon& lexicon);

struct DaySlot {
  std::optional<double> value;
  MoodSymbol symbol = MoodSymbol::Silence;
  int post_count = 0;
};

/// Per-day values ordered oldest first: `days.front()` is day t = length,
/// `days.back()` is t = 1, the day before the survey.
struct DailySeries {
  std::string user_id;
  std::vector<DaySlot> days;

  int length() const { return static_cast<int>(days.size()); }
  /// Slot `offset` days before the day preceding the survey (offset 0 is t = 1).
  const DaySlot& at_offset(int offset) const { return days[days.size() - 1 - static_cast<std::size_t>(offset)]; }
  std::vector<MoodSymbol> symbols() const;
  std::vector<int> symbol_indices() const;
};

struct SeriesOptions {
  int length_days = kLookbackDays;
  /// Fixed offset from UTC used for calendar-day bucketing.
  int utc_offset_minutes = 0;
};

DailySeries build_daily_series(const UserTimeline& timeline, const SentimentLexicon& lexicon,
                               const SeriesOptions& options = {});

}  // namespace moodscope
