#include "moodscope/sentiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "moodscope/text.hpp"

namespace moodscope {

namespace {

std::string lowercase(std::string s) {
  for (auto& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return s;
}

std::vector<std::string> split_tab(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

int parse_strength(const std::string& text, const std::string& where) {
  int value = 0;
  std::string_view view = text;
  if (!view.empty() && view.front() == '+') view.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(view.data(), view.data() + view.size(), value);
  if (ec != std::errc{} || ptr != view.data() + view.size()) throw std::runtime_error(where + ": bad integer '" + text + "'");
  return value;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
    fn(line, path.string() + ":" + std::to_string(number));
  }
}

}  // namespace

void SentimentLexicon::add_term(std::string term, int strength) {
  if (strength == 0 || strength < -5 || strength > 5)
    throw std::invalid_argument("lexicon strength out of range for '" + term + "'");
  term = lowercase(std::move(term));
  if (term.empty()) throw std::invalid_argument("empty lexicon term");
  if (term.back() == '*') {
    term.pop_back();
    auto it = std::find_if(stems_.begin(), stems_.end(), [&](const auto& e) { return e.first == term; });
    if (it != stems_.end()) throw std::invalid_argument("duplicate lexicon stem '" + term + "*'");
    stems_.emplace_back(std::move(term), strength);
    std::stable_sort(stems_.begin(), stems_.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
    return;
  }
  if (!terms_.emplace(term, strength).second) throw std::invalid_argument("duplicate lexicon term '" + term + "'");
}

void SentimentLexicon::add_negation(std::string word) { negations_.insert(lowercase(std::move(word))); }

void SentimentLexicon::add_booster(std::string word, int offset) { boosters_[lowercase(std::move(word))] = offset; }

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& terms,
                                        const std::optional<std::filesystem::path>& negations,
                                        const std::optional<std::filesystem::path>& boosters) {
  SentimentLexicon lex;
  for_each_line(terms, [&](const std::string& line, const std::string& where) {
    auto fields = split_tab(line);
    if (fields.size() < 2) throw std::runtime_error(where + ": expected term<TAB>strength");
    try {
      lex.add_term(fields[0], parse_strength(fields[1], where));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  });
  if (negations) {
    for_each_line(*negations, [&](const std::string& line, const std::string&) { lex.add_negation(split_tab(line)[0]); });
  }
  if (boosters) {
    for_each_line(*boosters, [&](const std::string& line, const std::string& where) {
      auto fields = split_tab(line);
      if (fields.size() < 2) throw std::runtime_error(where + ": expected word<TAB>offset");
      lex.add_booster(fields[0], parse_strength(fields[1], where));
    });
  }
  return lex;
}

std::optional<int> SentimentLexicon::strength(std::string_view token) const {
  if (auto it = terms_.find(std::string(token)); it != terms_.end()) return it->second;
  for (const auto& [stem, value] : stems_)
    if (token.size() >= stem.size() && token.substr(0, stem.size()) == stem) return value;
  return std::nullopt;
}

std::optional<int> SentimentLexicon::booster(std::string_view token) const {
  if (auto it = boosters_.find(std::string(token)); it != boosters_.end()) return it->second;
  return std::nullopt;
}

PostSentiment score_post(std::string_view text, const SentimentLexicon& lexicon,
                         const std::optional<PostSentiment>& override_score) {
  if (override_score) return *override_score;
  const auto tokens = tokenize(text);
  int pos = 1;
  int neg = -1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto s = lexicon.strength(tokens[i]);
    if (!s) continue;
    bool negated = false;
    for (std::size_t back = 1; back <= kNegationScope && back <= i; ++back) {
      if (lexicon.is_negation(tokens[i - back])) {
        negated = true;
        break;
      }
    }
    if (negated) continue;
    int value = *s;
    if (i > 0) {
      if (auto boost = lexicon.booster(tokens[i - 1])) value += value > 0 ? *boost : -*boost;
    }
    if (*s > 0)
      pos = std::max(pos, std::clamp(value, 1, 5));
    else
      neg = std::min(neg, std::clamp(value, -5, -1));
  }
  return {pos, neg};
}

DayScore score_day(std::span<const int> valences) {
  if (valences.empty()) return {std::nullopt, MoodSymbol::Silence};
  long sum = 0;
  for (int v : valences) sum += v;
  const double mean = static_cast<double>(sum) / static_cast<double>(valences.size());
  // The sign comes from the integer sum so that V == 0 is exact.
  const MoodSymbol symbol = sum > 0 ? MoodSymbol::Positive : (sum < 0 ? MoodSymbol::Negative : MoodSymbol::Neutral);
  return {mean, symbol};
}

DayScore score_day(std::span<const PostRecord> posts, const SentimentLexicon& lexicon) {
  std::vector<int> valences;
  valences.reserve(posts.size());
  for (const auto& p : posts) valences.push_back(score_post(p.text, lexicon, p.sentiment_override).valence());
  return score_day(valences);
}

std::vector<MoodSymbol> DailySeries::symbols() const {
  std::vector<MoodSymbol> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(d.symbol);
  return out;
}

std::vector<int> DailySeries::symbol_indices() const {
  std::vector<int> out;
  out.reserve(days.size());
  for (const auto& d : days) out.push_back(index_of(d.symbol));
  return out;
}

DailySeries build_daily_series(const UserTimeline& timeline, const SentimentLexicon& lexicon,
                               const SeriesOptions& options) {
  using namespace std::chrono;
  const int length = options.length_days;
  std::vector<std::vector<int>> valences(static_cast<std::size_t>(length));
  const auto survey_day = timeline.survey_date.time_since_epoch().count();
  for (const auto& post : timeline.posts) {
    const auto local = post.timestamp + minutes{options.utc_offset_minutes};
    const auto day = floor<days>(local).time_since_epoch().count();
    const auto t = survey_day - day;  // 1 = day before survey
    if (t < 1 || t > length) continue;
    valences[static_cast<std::size_t>(length - t)].push_back(
        score_post(post.text, lexicon, post.sentiment_override).valence());
  }
  DailySeries series;
  series.user_id = timeline.user_id;
  series.days.resize(static_cast<std::size_t>(length));
  for (std::size_t i = 0; i < valences.size(); ++i) {
    const auto score = score_day(valences[i]);
    series.days[i] = {score.value, score.symbol, static_cast<int>(valences[i].size())};
  }
  return series;
}

}  // namespace moodscope
