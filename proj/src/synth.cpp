#include "moodscope/synth.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "moodscope/random.hpp"

namespace moodscope {

namespace {

constexpr double kRowTolerance = 1e-9;

constexpr std::array<const char*, 4> kPositiveWords = {"good", "happy", "great", "wonderful"};   // +2..+5
constexpr std::array<const char*, 4> kNegativeWords = {"bad", "sad", "awful", "miserable"};      // -2..-5

constexpr std::array<const char*, 96> kFiller = {
    "today",   "went",    "the",     "store",   "with",    "friends", "coffee",  "morning", "evening", "work",
    "office",  "meeting", "lunch",   "dinner",  "weekend", "movie",   "music",   "song",    "game",    "team",
    "city",    "train",   "bus",     "car",     "road",    "trip",    "holiday", "beach",   "park",    "walk",
    "run",     "gym",     "class",   "school",  "exam",    "study",   "book",    "read",    "write",   "photo",
    "picture", "video",   "phone",   "call",    "text",    "family",  "mom",     "dad",     "sister",  "brother",
    "dog",     "cat",     "house",   "room",    "kitchen", "cook",    "pizza",   "tea",     "rain",    "sun",
    "snow",    "weather", "night",   "sleep",   "tired",   "home",    "back",    "just",    "really",  "some",
    "time",    "day",     "week",    "month",   "year",    "party",   "birthday", "news",   "show",    "watch",
    "play",    "shop",    "buy",     "new",     "old",     "little",  "big",     "early",   "late",    "soon",
    "here",    "there",   "again",   "still",   "maybe",   "finally"};

void check_row(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& what) {
  if ((row.array() < 0.0).any() || !row.allFinite())
    throw std::invalid_argument(what + " has negative or non-finite entries");
  if (std::abs(row.sum() - 1.0) > kRowTolerance) throw std::invalid_argument(what + " does not sum to 1");
}

SymbolMatrix normalized_rows(SymbolMatrix m) {
  for (int r = 0; r < 4; ++r) m.row(r) /= m.row(r).sum();
  return m;
}

std::size_t draw(Rng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::array<double, 4> w{};
  for (Eigen::Index i = 0; i < row.size(); ++i) w[static_cast<std::size_t>(i)] = row(i);
  return rng.categorical(std::span<const double>(w.data(), static_cast<std::size_t>(row.size())));
}

PostSentiment draw_sentiment(Rng& rng, MoodSymbol symbol) {
  switch (symbol) {
    case MoodSymbol::Positive: {
      const int pos = static_cast<int>(rng.uniform_int(2, 5));
      return {pos, -static_cast<int>(rng.uniform_int(1, pos - 1))};
    }
    case MoodSymbol::Negative: {
      const int mag = static_cast<int>(rng.uniform_int(2, 5));
      return {static_cast<int>(rng.uniform_int(1, mag - 1)), -mag};
    }
    default: {
      const int k = static_cast<int>(rng.uniform_int(1, 5));
      return {k, -k};
    }
  }
}

std::string draw_text(Rng& rng, PostSentiment s) {
  std::vector<std::string> words;
  const auto n = rng.uniform_int(3, 8);
  for (std::int64_t i = 0; i < n; ++i)
    words.emplace_back(kFiller[static_cast<std::size_t>(rng.uniform_int(0, kFiller.size() - 1))]);
  auto insert = [&](const char* w) {
    const auto at = rng.uniform_int(0, static_cast<std::int64_t>(words.size()));
    words.insert(words.begin() + at, w);
  };
  if (s.pos > 1) insert(kPositiveWords[static_cast<std::size_t>(s.pos - 2)]);
  if (s.neg < -1) insert(kNegativeWords[static_cast<std::size_t>(-s.neg - 2)]);
  std::string text;
  for (const auto& w : words) {
    if (!text.empty()) text.push_back(' ');
    text += w;
  }
  return text;
}

nlohmann::json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw std::invalid_argument(what + ": expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument(what + ": expected " + std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::RowVectorXd row_from_json(const nlohmann::json& j, Eigen::Index size, const std::string& what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size)
    throw std::invalid_argument(what + ": expected " + std::to_string(size) + " entries");
  Eigen::RowVectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

void CohortSpec::validate() const {
  if (groups.empty()) throw std::invalid_argument("cohort spec has no groups");
  if (sequence_length_days < 1) throw std::invalid_argument("sequence_length_days must be >= 1");
  for (const auto& g : groups) {
    const std::string where = "group '" + g.name + "'";
    if (g.n_users < 1) throw std::invalid_argument(where + ": n_users must be >= 1");
    if (g.cesd_min < 0 || g.cesd_max > kMaxCesd || g.cesd_min > g.cesd_max)
      throw std::invalid_argument(where + ": cesd range must lie within 0..60");
    check_row(g.emission, where + " emission row");
    for (int r = 0; r < 4; ++r) check_row(g.transition.row(r), where + " transition row " + std::to_string(r));
    if (g.hidden) {
      check_row(g.hidden->initial.transpose(), where + " hidden initial distribution");
      for (int r = 0; r < 2; ++r) {
        check_row(g.hidden->transition.row(r), where + " hidden transition row " + std::to_string(r));
        check_row(g.hidden->emission.row(r), where + " hidden emission row " + std::to_string(r));
      }
    }
  }
}

SyntheticCohort synthesize(const CohortSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  SyntheticCohort cohort;
  const int length = spec.sequence_length_days;
  for (const auto& group : spec.groups) {
    for (int u = 0; u < group.n_users; ++u) {
      char id[64];
      std::snprintf(id, sizeof id, "%s_%04d", group.name.c_str(), u);
      GeneratorTrace trace{id, group.name, {}, {}};
      trace.symbols.reserve(static_cast<std::size_t>(length));

      if (group.hidden) {
        const auto& h = *group.hidden;
        auto state = draw(rng, h.initial.transpose());
        for (int day = 0; day < length; ++day) {
          if (day > 0) state = draw(rng, h.transition.row(static_cast<Eigen::Index>(state)));
          trace.hidden_states.push_back(static_cast<int>(state));
          trace.symbols.push_back(symbol_from_index(
              static_cast<int>(draw(rng, h.emission.row(static_cast<Eigen::Index>(state))))));
        }
      } else {
        auto symbol = draw(rng, group.emission);
        for (int day = 0; day < length; ++day) {
          if (day > 0) symbol = draw(rng, group.transition.row(static_cast<Eigen::Index>(symbol)));
          trace.symbols.push_back(symbol_from_index(static_cast<int>(symbol)));
        }
      }

      UserTimeline timeline;
      timeline.user_id = id;
      timeline.survey_date = spec.survey_date;
      timeline.cesd_score = static_cast<int>(rng.uniform_int(group.cesd_min, group.cesd_max));
      for (int day = 0; day < length; ++day) {
        const auto symbol = trace.symbols[static_cast<std::size_t>(day)];
        if (symbol == MoodSymbol::Silence) continue;
        const auto sentiment = draw_sentiment(rng, symbol);
        const auto offset = std::chrono::seconds{rng.uniform_int(0, 86399)};
        const Timestamp ts = Timestamp{spec.survey_date - std::chrono::days{length - day}} + offset;
        timeline.posts.push_back({id, ts, draw_text(rng, sentiment), sentiment});
      }
      cohort.timelines.push_back(std::move(timeline));
      cohort.traces.push_back(std::move(trace));
    }
  }
  return cohort;
}

SentimentLexicon synthetic_lexicon() {
  SentimentLexicon lex;
  for (int i = 0; i < 4; ++i) {
    lex.add_term(kPositiveWords[static_cast<std::size_t>(i)], i + 2);
    lex.add_term(kNegativeWords[static_cast<std::size_t>(i)], -(i + 2));
  }
  return lex;
}

SymbolMatrix published_transitions_high() {
  SymbolMatrix m;
  m << 21.1, 15.7, 13.4, 49.6,  //
      22.3, 16.2, 14.1, 47.3,   //
      19.3, 14.5, 12.8, 53.3,   //
      5.82, 3.75, 4.21, 86.2;
  return normalized_rows(m);
}

SymbolMatrix published_transitions_low() {
  SymbolMatrix m;
  m << 19.5, 13.3, 12.3, 54.8,  //
      20.5, 13.3, 12.9, 53.3,   //
      17.6, 11.6, 11.8, 58.9,   //
      5.92, 3.71, 4.33, 85.9;
  return normalized_rows(m);
}

SymbolRow published_emission_low() {
  SymbolRow r;
  r << 0.0851, 0.0520, 0.0465, 0.816;
  return r / r.sum();
}

SymbolRow published_emission_high() {
  SymbolRow r;
  r << 0.0315, 0.128, 0.0700, 0.769;
  return r / r.sum();
}

CohortSpec published_markov_cohort(int n_users_per_group, std::uint64_t seed) {
  CohortSpec spec;
  spec.rng_seed = seed;
  GroupSpec high{"high", n_users_per_group, published_emission_high(), published_transitions_high(), std::nullopt, 23, 60};
  GroupSpec low{"low", n_users_per_group, published_emission_low(), published_transitions_low(), std::nullopt, 0, 22};
  spec.groups = {high, low};
  return spec;
}

CohortSpec published_hidden_cohort(int n_users_per_group, std::uint64_t seed) {
  CohortSpec spec;
  spec.rng_seed = seed;
  Eigen::Matrix<double, 2, 4> emission;
  emission.row(0) = published_emission_low();
  emission.row(1) = published_emission_high();

  HiddenGenerator high_hidden;
  high_hidden.transition << 0.95, 0.05, 0.10, 0.90;
  high_hidden.initial << 2.0 / 3.0, 1.0 / 3.0;
  high_hidden.emission = emission;

  HiddenGenerator low_hidden;
  low_hidden.transition << 0.97, 0.03, 0.30, 0.70;
  low_hidden.initial << 0.9, 0.1;
  low_hidden.emission = emission;

  GroupSpec high{"high", n_users_per_group, published_emission_high(), published_transitions_high(), high_hidden, 23, 60};
  GroupSpec low{"low", n_users_per_group, published_emission_low(), published_transitions_low(), low_hidden, 0, 22};
  spec.groups = {high, low};
  return spec;
}

nlohmann::json to_json(const CohortSpec& spec) {
  nlohmann::json j;
  j["sequence_length_days"] = spec.sequence_length_days;
  j["rng_seed"] = spec.rng_seed;
  j["survey_date"] = format_date(spec.survey_date);
  auto groups = nlohmann::json::array();
  for (const auto& g : spec.groups) {
    nlohmann::json jg;
    jg["name"] = g.name;
    jg["n_users"] = g.n_users;
    jg["emission"] = matrix_json(g.emission)[0];
    jg["transition"] = matrix_json(g.transition);
    jg["cesd"] = {g.cesd_min, g.cesd_max};
    if (g.hidden) {
      jg["hidden"]["initial"] = matrix_json(g.hidden->initial.transpose())[0];
      jg["hidden"]["transition"] = matrix_json(g.hidden->transition);
      jg["hidden"]["emission"] = matrix_json(g.hidden->emission);
    }
    groups.push_back(jg);
  }
  j["groups"] = groups;
  return j;
}

CohortSpec cohort_spec_from_json(const nlohmann::json& j) {
  CohortSpec spec;
  spec.sequence_length_days = j.value("sequence_length_days", kLookbackDays);
  spec.rng_seed = j.value("rng_seed", std::uint64_t{0});
  if (j.contains("survey_date")) {
    auto d = parse_date(j["survey_date"].get<std::string>());
    if (!d) throw std::invalid_argument("cohort spec: bad survey_date");
    spec.survey_date = *d;
  }
  if (!j.contains("groups") || !j["groups"].is_array()) throw std::invalid_argument("cohort spec: missing groups");
  for (const auto& jg : j["groups"]) {
    GroupSpec g;
    g.name = jg.at("name").get<std::string>();
    g.n_users = jg.at("n_users").get<int>();
    g.emission = row_from_json(jg.at("emission"), 4, g.name + ".emission");
    g.transition = matrix_from_json(jg.at("transition"), 4, 4, g.name + ".transition");
    if (jg.contains("cesd")) {
      g.cesd_min = jg["cesd"].at(0).get<int>();
      g.cesd_max = jg["cesd"].at(1).get<int>();
    }
    if (jg.contains("hidden")) {
      HiddenGenerator h;
      h.initial = row_from_json(jg["hidden"].at("initial"), 2, g.name + ".hidden.initial").transpose();
      h.transition = matrix_from_json(jg["hidden"].at("transition"), 2, 2, g.name + ".hidden.transition");
      h.emission = matrix_from_json(jg["hidden"].at("emission"), 2, 4, g.name + ".hidden.emission");
      g.hidden = h;
    }
    spec.groups.push_back(std::move(g));
  }
  spec.validate();
  return spec;
}

}  // namespace moodscope
