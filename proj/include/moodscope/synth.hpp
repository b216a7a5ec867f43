#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "moodscope/corpus.hpp"
#include "moodscope/sentiment.hpp"

namespace moodscope {

using SymbolMatrix = Eigen::Matrix4d;
using SymbolRow = Eigen::RowVector4d;

/// Optional two-state hidden layer: the day symbol is emitted from the
/// current hidden state instead of following the symbol-level chain.
struct HiddenGenerator {
  Eigen::Vector2d initial;
  Eigen::Matrix2d transition;
  Eigen::Matrix<double, 2, 4> emission;
};

struct GroupSpec {
  std::string name;
  int n_users = 1;
  /// First-day symbol distribution over (positive, negative, neutral, silence).
  SymbolRow emission = SymbolRow::Constant(0.25);
  /// Day-to-day symbol transitions, row = today, column = tomorrow.
  SymbolMatrix transition = SymbolMatrix::Constant(0.25);
  std::optional<HiddenGenerator> hidden;
  int cesd_min = 0;
  int cesd_max = kMaxCesd;
};

struct CohortSpec {
  std::vector<GroupSpec> groups;
  int sequence_length_days = kLookbackDays;
  std::uint64_t rng_seed = 0;
  Date survey_date = Date{std::chrono::year{2012} / 6 / 1};

  /// Throws std::invalid_argument on non-stochastic rows or bad sizes.
  void validate() const;
};

/// What the generator actually drew for one user, oldest day first.
struct GeneratorTrace {
  std::string user_id;
  std::string group;
  std::vector<MoodSymbol> symbols;
  std::vector<int> hidden_states;  // empty unless the group has a hidden layer
};

struct SyntheticCohort {
  std::vector<UserTimeline> timelines;
  std::vector<GeneratorTrace> traces;
};

SyntheticCohort synthesize(const CohortSpec& spec);

/// Lexicon matching the sentiment words the generator writes into post text,
/// so that scoring the text reproduces each post's override.
SentimentLexicon synthetic_lexicon();

/// Row-normalized observation transitions for the high and low symptom
/// groups, from the published percentages. The silence row's negative entry
/// is read as 3.75 (the printed 37.5 breaks the row total); see README.
SymbolMatrix published_transitions_high();
SymbolMatrix published_transitions_low();

/// Published hidden-state emission rows (low symptom state, high symptom state).
SymbolRow published_emission_low();
SymbolRow published_emission_high();

/// Two groups ("high", "low") following the published observation tables.
CohortSpec published_markov_cohort(int n_users_per_group, std::uint64_t seed);

/// Two groups ("high", "low") whose days come from a two-state hidden chain
/// with the published emission rows. High users spend more time in the high
/// symptom state than low users.
CohortSpec published_hidden_cohort(int n_users_per_group, std::uint64_t seed);

nlohmann::json to_json(const CohortSpec& spec);
CohortSpec cohort_spec_from_json(const nlohmann::json& j);

}  // namespace moodscope
