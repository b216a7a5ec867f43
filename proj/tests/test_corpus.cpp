#include <sstream>

#include "doctest.h"
#include "moodscope/corpus.hpp"

using namespace moodscope;
using namespace std::chrono;

namespace {

IngestResult ingest_text(const std::string& posts, const std::string& users, PostFormat format = PostFormat::Jsonl) {
  std::istringstream p(posts), u(users);
  IngestOptions opts;
  opts.format = format;
  return ingest(p, u, opts);
}

std::vector<std::string> problems_of(const std::string& posts, const std::string& users) {
  try {
    ingest_text(posts, users);
  } catch (const IngestError& e) {
    return e.problems();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& lines, std::string_view needle) {
  for (const auto& l : lines)
    if (l.find(needle) != std::string::npos) return true;
  return false;
}

const std::string kUsers = "user_id,survey_date,cesd_score\nu1,2012-06-01,10\nu2,2012-06-01,30\n";

}  // namespace

TEST_CASE("label bands and binary split") {
  CHECK(label(15) == SymptomLabel{Ternary::Low, BinaryLabel::Low});
  CHECK(label(22) == SymptomLabel{Ternary::Moderate, BinaryLabel::Low});
  CHECK(label(23) == SymptomLabel{Ternary::High, BinaryLabel::High});
  CHECK(label(0).ternary == Ternary::Low);
  CHECK(label(16).ternary == Ternary::Moderate);
  CHECK(label(60).ternary == Ternary::High);
  CHECK_THROWS_AS(label(61), std::out_of_range);
  CHECK_THROWS_AS(label(-1), std::out_of_range);
}

TEST_CASE("label is monotone in score and binary agrees with the cutoff") {
  for (int a = 0; a <= 60; ++a) {
    for (int b = a; b <= 60; ++b) CHECK(label(a).ternary <= label(b).ternary);
    CHECK((label(a).binary == BinaryLabel::High) == (a > 22));
  }
  CHECK(label(20, 19).binary == BinaryLabel::High);
}

TEST_CASE("ingest keeps order and sorts posts") {
  const std::string posts =
      R"({"user_id":"u2","ts":"2012-03-01T00:00:00Z","text":"c"})" "\n"
      R"({"user_id":"u1","ts":"2012-01-01T10:00:00Z","text":"a"})" "\n"
      R"({"user_id":"u1","ts":"2012-01-02T10:00:00Z","text":"b"})" "\n"
      R"({"user_id":"u1","ts":"2012-01-03T10:00:00Z","text":"c"})" "\n"
      R"({"user_id":"u2","ts":"2012-03-02T00:00:00Z","text":"d"})" "\n"
      R"({"user_id":"u2","ts":"2012-03-03T00:00:00Z","text":"e","pos":3,"neg":-1})" "\n";
  const auto r = ingest_text(posts, kUsers);
  REQUIRE(r.timelines.size() == 2);
  CHECK(r.timelines[0].user_id == "u1");
  CHECK(r.timelines[1].user_id == "u2");
  CHECK(r.timelines[0].posts.size() == 3);
  CHECK(r.timelines[1].posts.size() == 3);
  for (const auto& t : r.timelines)
    for (std::size_t i = 1; i < t.posts.size(); ++i) CHECK(t.posts[i - 1].timestamp <= t.posts[i].timestamp);
  CHECK(r.timelines[1].posts[2].sentiment_override == PostSentiment{3, -1});
  CHECK(r.timelines[1].cesd_score == 30);
  CHECK(r.warnings.empty());
}

TEST_CASE("post on the survey date falls outside the lookback") {
  const std::string posts = R"({"user_id":"u1","ts":"2012-06-01T00:00:00Z","text":"x"})" "\n";
  const auto r = ingest_text(posts, kUsers);
  REQUIRE(r.timelines.size() == 2);
  CHECK(r.timelines[0].posts.empty());
  CHECK(r.timelines[1].posts.empty());
  CHECK(any_contains(r.warnings, "outside"));
}

TEST_CASE("lookback lower bound is inclusive") {
  const std::string posts =
      R"({"user_id":"u1","ts":"2011-06-02T00:00:00Z","text":"first day in range"})" "\n"
      R"({"user_id":"u1","ts":"2011-06-01T23:59:59Z","text":"too early"})" "\n";
  const auto r = ingest_text(posts, kUsers);
  REQUIRE(r.timelines[0].posts.size() == 1);
  CHECK(r.timelines[0].posts[0].text == "first day in range");
}

TEST_CASE("cesd out of range is an error naming the user") {
  const auto problems = problems_of("", "user_id,survey_date,cesd_score\nalice,2012-06-01,61\n");
  REQUIRE(problems.size() == 1);
  CHECK(any_contains(problems, "alice"));
  CHECK(any_contains(problems, "61"));
}

TEST_CASE("malformed rows carry line numbers") {
  const std::string posts =
      R"({"user_id":"u1","ts":"2012-01-01T10:00:00Z","text":"ok"})" "\n"
      "{not json\n"
      R"({"user_id":"u1","ts":"yesterday","text":"x"})" "\n"
      R"({"user_id":"u1","text":"no ts"})" "\n"
      R"({"user_id":"u1","ts":"2012-01-01T10:00:00Z","text":"x","pos":7,"neg":-1})" "\n";
  const auto problems = problems_of(posts, kUsers);
  CHECK(problems.size() == 4);
  CHECK(any_contains(problems, "line 2"));
  CHECK(any_contains(problems, "line 3"));
  CHECK(any_contains(problems, "line 4"));
  CHECK(any_contains(problems, "line 5"));
}

TEST_CASE("posts from users without a survey record are listed") {
  const std::string posts =
      R"({"user_id":"ghost","ts":"2012-01-01T10:00:00Z","text":"boo"})" "\n"
      R"({"user_id":"phantom","ts":"2012-01-01T10:00:00Z","text":"boo"})" "\n";
  const auto problems = problems_of(posts, kUsers);
  REQUIRE(problems.size() == 1);
  CHECK(any_contains(problems, "ghost"));
  CHECK(any_contains(problems, "phantom"));
}

TEST_CASE("user table errors") {
  CHECK(any_contains(problems_of("", "user_id,survey_date,cesd_score\nu1,2012-06-01,5\nu1,2012-06-01,6\n"), "duplicate"));
  CHECK(any_contains(problems_of("", "user_id,survey_date\nu1,2012-06-01\n"), "cesd_score"));
  CHECK(any_contains(problems_of("", "user_id,survey_date,cesd_score\nu1,June,5\n"), "survey_date"));
}

TEST_CASE("unsorted posts are accepted with a warning") {
  const std::string posts =
      R"({"user_id":"u1","ts":"2012-01-03T10:00:00Z","text":"c"})" "\n"
      R"({"user_id":"u1","ts":"2012-01-01T10:00:00Z","text":"a"})" "\n";
  const auto r = ingest_text(posts, kUsers);
  REQUIRE(r.timelines[0].posts.size() == 2);
  CHECK(r.timelines[0].posts[0].text == "a");
  CHECK(any_contains(r.warnings, "u1"));
}

TEST_CASE("CSV posts with quoted multi-line text") {
  const std::string posts =
      "user_id,ts,text,pos,neg\n"
      "u1,2012-01-01T10:00:00Z,\"hello, world\",,\n"
      "u1,2012-01-02T10:00:00+02:00,\"two\nlines \"\"quoted\"\"\",2,-1\n";
  const auto r = ingest_text(posts, kUsers, PostFormat::Csv);
  REQUIRE(r.timelines[0].posts.size() == 2);
  CHECK(r.timelines[0].posts[0].text == "hello, world");
  CHECK(r.timelines[0].posts[1].text == "two\nlines \"quoted\"");
  CHECK(r.timelines[0].posts[1].sentiment_override == PostSentiment{2, -1});
  CHECK(format_timestamp(r.timelines[0].posts[1].timestamp) == "2012-01-02T08:00:00Z");
}

TEST_CASE("timestamp parsing") {
  CHECK(format_timestamp(*parse_timestamp("2012-05-01T08:00:00Z")) == "2012-05-01T08:00:00Z");
  CHECK(format_timestamp(*parse_timestamp("2012-05-01T08:00:00.750Z")) == "2012-05-01T08:00:00Z");
  CHECK(format_timestamp(*parse_timestamp("2012-05-01T08:00:00-05:30")) == "2012-05-01T13:30:00Z");
  CHECK(format_timestamp(*parse_timestamp("2012-05-01 08:00:00")) == "2012-05-01T08:00:00Z");
  CHECK_FALSE(parse_timestamp("2012-13-01T00:00:00Z"));
  CHECK_FALSE(parse_timestamp("2012-02-30T00:00:00Z"));
  CHECK_FALSE(parse_timestamp("garbage"));
  CHECK(format_date(*parse_date("2012-06-01")) == "2012-06-01");
  CHECK_FALSE(parse_date("2012-6-1x"));
}

TEST_CASE("export then ingest round-trips exactly") {
  const std::string posts =
      R"({"user_id":"u1","ts":"2012-01-01T10:00:00Z","text":"café \"quoted\"\nnext"})" "\n"
      R"({"user_id":"u1","ts":"2012-01-01T10:00:00Z","text":"same second","pos":4,"neg":-2})" "\n"
      R"({"user_id":"u2","ts":"2012-02-01T10:00:00Z","text":"b"})" "\n";
  const auto first = ingest_text(posts, kUsers);
  std::ostringstream p, u;
  write_posts_jsonl(p, first.timelines);
  write_users_csv(u, first.timelines);
  const auto second = ingest_text(p.str(), u.str());
  CHECK(second.timelines == first.timelines);
  std::ostringstream p2;
  write_posts_jsonl(p2, second.timelines);
  CHECK(p2.str() == p.str());
}

TEST_CASE("cohort statistics") {
  UserTimeline one{"a", Date{year{2012} / 6 / 1}, 20, {}};
  for (int i = 0; i < 10; ++i) one.posts.push_back({"a", sys_days{year{2012} / 5 / 1} + hours{i}, "x", std::nullopt});
  auto s = cohort_stats({one});
  CHECK(s.n_users == 1);
  CHECK(s.mean_posts == doctest::Approx(10.0));
  CHECK(s.median_posts == doctest::Approx(10.0));
  CHECK(s.cesd_mean == doctest::Approx(20.0));
  CHECK(s.cesd_sd == doctest::Approx(0.0));

  UserTimeline a{"a", Date{year{2012} / 6 / 1}, 16, {}}, b{"b", Date{year{2012} / 6 / 1}, 36, {}};
  s = cohort_stats({a, b});
  CHECK(s.cesd_mean == doctest::Approx(26.0));
  CHECK(s.cesd_sd == doctest::Approx(10.0));
  CHECK(s.frac_moderate == doctest::Approx(0.5));
  CHECK(s.frac_high == doctest::Approx(0.5));
  CHECK(s.frac_binary_high == doctest::Approx(0.5));
}

TEST_CASE("fixture files ingest from disk") {
  const std::string dir = MOODSCOPE_FIXTURES;
  const auto r = ingest(dir + "/posts_clean.jsonl", dir + "/users_clean.csv");
  REQUIRE(r.timelines.size() == 2);
  CHECK(r.timelines[0].posts.size() == 3);
  CHECK(r.timelines[1].posts.size() == 3);
  CHECK_THROWS_AS(ingest(dir + "/posts_clean.jsonl", dir + "/users_cesd61.csv"), IngestError);
  CHECK_THROWS(ingest(dir + "/nope.jsonl", dir + "/users_clean.csv"));
}
