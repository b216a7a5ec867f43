#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "moodscope/random.hpp"
#include "moodscope/sentiment.hpp"
#include "moodscope/text.hpp"

using namespace moodscope;
using namespace std::chrono;

namespace {

SentimentLexicon love_hate() {
  SentimentLexicon lex;
  lex.add_term("love", 3);
  lex.add_term("hate", -4);
  lex.add_term("good", 2);
  return lex;
}

UserTimeline timeline_with(std::vector<std::pair<sys_seconds, PostSentiment>> posts) {
  UserTimeline t{"u", Date{year{2012} / 6 / 1}, 10, {}};
  for (auto& [ts, s] : posts) t.posts.push_back({"u", ts, "", s});
  return t;
}

}  // namespace

TEST_CASE("tokenizer") {
  CHECK(tokenize("Hello, WORLD!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("'quoted' text_1") == std::vector<std::string>{"quoted", "text_1"});
  CHECK(tokenize("café olé") == std::vector<std::string>{"café", "olé"});
  CHECK(tokenize("").empty());
}

TEST_CASE("score_post examples") {
  const auto lex = love_hate();
  CHECK(score_post("", lex) == PostSentiment{1, -1});
  CHECK(score_post("", lex).valence() == 0);
  const auto s = score_post("love love hate", lex);
  CHECK(s == PostSentiment{3, -4});
  CHECK(s.valence() == -1);

  SentimentLexicon neg;
  neg.add_term("good", 2);
  neg.add_negation("not");
  CHECK(score_post("not good", neg) == PostSentiment{1, -1});
  CHECK(score_post("good", neg) == PostSentiment{2, -1});
  // Outside the three-token scope the negation no longer applies.
  CHECK(score_post("not a b c good", neg) == PostSentiment{2, -1});
  CHECK(score_post("not a b good", neg) == PostSentiment{1, -1});
}

TEST_CASE("override is returned verbatim") {
  const auto lex = love_hate();
  CHECK(score_post("love", lex, PostSentiment{1, -5}) == PostSentiment{1, -5});
}

TEST_CASE("boosters, stems and clamping") {
  SentimentLexicon lex;
  lex.add_term("happ*", 3);
  lex.add_term("happy", 2);
  lex.add_term("sad", -2);
  lex.add_booster("very", 1);
  lex.add_booster("extremely", 3);
  CHECK(score_post("happiest", lex).pos == 3);
  CHECK(score_post("happy", lex).pos == 2);
  CHECK(score_post("very happy", lex).pos == 3);
  CHECK(score_post("very sad", lex).neg == -3);
  CHECK(score_post("extremely extremely happiest", lex).pos == 5);
  CHECK(score_post("extremely sad extremely", lex).neg == -5);
  CHECK(score_post("sad very", lex).neg == -2);
}

TEST_CASE("lexicon validation") {
  SentimentLexicon lex;
  CHECK_THROWS_AS(lex.add_term("bad", 0), std::invalid_argument);
  CHECK_THROWS_AS(lex.add_term("bad", 6), std::invalid_argument);
  lex.add_term("Bad", -2);
  CHECK(lex.strength("bad") == -2);
  CHECK_THROWS_AS(lex.add_term("bad", -3), std::invalid_argument);
}

TEST_CASE("lexicon files") {
  const auto dir = std::filesystem::temp_directory_path() / "moodscope_lexicon_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "terms.tsv") << "# comment\ngood\t2\nawful\t-4\nhopeless*\t-5\n";
    std::ofstream(dir / "neg.txt") << "not\nnever\n";
    std::ofstream(dir / "boost.tsv") << "very\t1\n";
    std::ofstream(dir / "bad.tsv") << "good\ttwo\n";
  }
  const auto lex = SentimentLexicon::load(dir / "terms.tsv", dir / "neg.txt", dir / "boost.tsv");
  CHECK(lex.size() == 3);
  CHECK(lex.strength("hopelessness") == -5);
  CHECK(lex.is_negation("never"));
  CHECK(lex.booster("very") == 1);
  CHECK(score_post("never good but very awful", lex) == PostSentiment{1, -5});
  CHECK_THROWS(SentimentLexicon::load(dir / "bad.tsv"));
  CHECK_THROWS(SentimentLexicon::load(dir / "missing.tsv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("scoring ignores token order without negations or boosters") {
  SentimentLexicon lex;
  const std::vector<std::pair<std::string, int>> terms{{"joy", 4}, {"fine", 1}, {"meh", -1}, {"grim", -3}, {"ok", 2}};
  for (const auto& [w, s] : terms) lex.add_term(w, s);
  const std::vector<std::string> vocab{"joy", "fine", "meh", "grim", "ok", "the", "a", "day"};
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> words;
    const auto n = rng.uniform_int(0, 10);
    for (int i = 0; i < n; ++i) words.push_back(vocab[static_cast<std::size_t>(rng.uniform_int(0, 7))]);
    auto join = [](const std::vector<std::string>& w) {
      std::string s;
      for (const auto& x : w) s += x + " ";
      return s;
    };
    const auto base = score_post(join(words), lex);
    CHECK(base.valid());
    rng.shuffle(std::span<std::string>(words));
    CHECK(score_post(join(words), lex) == base);
  }
}

TEST_CASE("score_day examples") {
  const auto none = score_day(std::span<const int>{});
  CHECK_FALSE(none.value);
  CHECK(none.symbol == MoodSymbol::Silence);

  const std::vector<int> balanced{2, -2};
  const auto neutral = score_day(balanced);
  CHECK(*neutral.value == 0.0);
  CHECK(neutral.symbol == MoodSymbol::Neutral);

  const std::vector<int> mixed{3, 1, -1};
  const auto positive = score_day(mixed);
  CHECK(*positive.value == doctest::Approx(1.0));
  CHECK(positive.symbol == MoodSymbol::Positive);

  const std::vector<int> low{-1, -2, 1};
  CHECK(score_day(low).symbol == MoodSymbol::Negative);
}

TEST_CASE("daily series layout") {
  const SentimentLexicon lex;
  const auto empty = build_daily_series(timeline_with({}), lex);
  CHECK(empty.length() == 365);
  for (const auto& d : empty.days) CHECK(d.symbol == MoodSymbol::Silence);

  const auto last = sys_days{year{2012} / 5 / 31} + hours{20};
  const auto one = build_daily_series(timeline_with({{last, PostSentiment{3, -1}}}), lex);
  CHECK(one.days.back().symbol == MoodSymbol::Positive);
  CHECK(*one.days.back().value == 2.0);
  CHECK(one.at_offset(0).post_count == 1);
  for (std::size_t i = 0; i + 1 < one.days.size(); ++i) CHECK(one.days[i].symbol == MoodSymbol::Silence);

  const auto first = sys_days{year{2011} / 6 / 2};
  const auto oldest = build_daily_series(timeline_with({{first, PostSentiment{1, -3}}}), lex);
  CHECK(oldest.days.front().symbol == MoodSymbol::Negative);
  CHECK(oldest.at_offset(364).symbol == MoodSymbol::Negative);
}

TEST_CASE("calendar day bucketing honours the UTC offset") {
  const SentimentLexicon lex;
  // 23:30 UTC on May 30 is already May 31 at UTC+2.
  const auto ts = sys_days{year{2012} / 5 / 30} + hours{23} + minutes{30};
  const auto t = timeline_with({{ts, PostSentiment{2, -1}}});
  CHECK(build_daily_series(t, lex).at_offset(1).post_count == 1);
  SeriesOptions shifted;
  shifted.utc_offset_minutes = 120;
  CHECK(build_daily_series(t, lex, shifted).at_offset(0).post_count == 1);
}

TEST_CASE("series invariants on random timelines") {
  const SentimentLexicon lex;
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<sys_seconds, PostSentiment>> posts;
    const auto n = rng.uniform_int(0, 200);
    for (int i = 0; i < n; ++i) {
      const auto day = sys_days{year{2011} / 6 / 2} + days{rng.uniform_int(0, 364)};
      posts.push_back({day + seconds{rng.uniform_int(0, 86399)},
                       PostSentiment{static_cast<int>(rng.uniform_int(1, 5)), static_cast<int>(rng.uniform_int(-5, -1))}});
    }
    std::sort(posts.begin(), posts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    const auto s = build_daily_series(timeline_with(posts), lex);
    int total = 0;
    for (const auto& d : s.days) {
      total += d.post_count;
      CHECK((d.symbol == MoodSymbol::Silence) == !d.value.has_value());
      CHECK((d.post_count == 0) == !d.value.has_value());
      if (d.value) {
        const auto expected = *d.value > 0 ? MoodSymbol::Positive : (*d.value < 0 ? MoodSymbol::Negative : MoodSymbol::Neutral);
        CHECK(d.symbol == expected);
      }
    }
    CHECK(total == n);
  }
}
