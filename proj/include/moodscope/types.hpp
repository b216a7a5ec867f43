#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace moodscope {

/// Daily mood symbol. The numeric values are the observation alphabet of the
/// HMM and the row/column order of every 4x4 transition table.
enum class MoodSymbol : std::uint8_t { Positive = 0, Negative = 1, Neutral = 2, Silence = 3 };

inline constexpr int kSymbolCount = 4;
inline constexpr std::array<MoodSymbol, kSymbolCount> kAllSymbols = {
    MoodSymbol::Positive, MoodSymbol::Negative, MoodSymbol::Neutral, MoodSymbol::Silence};

constexpr int index_of(MoodSymbol s) { return static_cast<int>(s); }

constexpr MoodSymbol symbol_from_index(int i) {
  if (i < 0 || i >= kSymbolCount) throw std::out_of_range("mood symbol index");
  return static_cast<MoodSymbol>(i);
}

/// Short column tag used in CSV headers (P, N, Neu, S).
constexpr std::string_view symbol_tag(MoodSymbol s) {
  switch (s) {
    case MoodSymbol::Positive: return "P";
    case MoodSymbol::Negative: return "N";
    case MoodSymbol::Neutral: return "Neu";
    case MoodSymbol::Silence: return "S";
  }
  return "?";
}

constexpr std::string_view symbol_name(MoodSymbol s) {
  switch (s) {
    case MoodSymbol::Positive: return "positive";
    case MoodSymbol::Negative: return "negative";
    case MoodSymbol::Neutral: return "neutral";
    case MoodSymbol::Silence: return "silence";
  }
  return "?";
}

std::optional<MoodSymbol> parse_symbol(std::string_view text);

/// Dual-strength post score: positive strength 1..5, negative strength -5..-1.
struct PostSentiment {
  int pos = 1;
  int neg = -1;

  constexpr int valence() const { return pos + neg; }
  constexpr bool valid() const { return pos >= 1 && pos <= 5 && neg >= -5 && neg <= -1; }

  friend constexpr bool operator==(const PostSentiment&, const PostSentiment&) = default;
};

/// CES-D symptom bands; ordered so that Low < Moderate < High.
enum class Ternary : std::uint8_t { Low = 0, Moderate = 1, High = 2 };

enum class BinaryLabel : std::uint8_t { Low = 0, High = 1 };

constexpr std::string_view label_name(Ternary t) {
  switch (t) {
    case Ternary::Low: return "low";
    case Ternary::Moderate: return "moderate";
    case Ternary::High: return "high";
  }
  return "?";
}

constexpr std::string_view label_name(BinaryLabel b) { return b == BinaryLabel::High ? "high" : "low"; }

}  // namespace moodscope
