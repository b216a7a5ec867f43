#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "moodscope/sentiment.hpp"
#include "moodscope/stats.hpp"
#include "moodscope/types.hpp"

namespace moodscope {

/// Discrete-emission HMM lambda = (pi, A, B). The mood model uses two hidden
/// states and the four mood symbols, but the algorithms accept any size.
struct HmmModel {
  Eigen::VectorXd pi;  ///< initial state distribution
  Eigen::MatrixXd A;   ///< state transitions, rows sum to 1
  Eigen::MatrixXd B;   ///< emissions, states x symbols, rows sum to 1
  int n_iter = 0;
  /// Pooled log-likelihood before each EM update, then after the last one.
  std::vector<double> log_likelihood;

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index symbols() const { return B.cols(); }

  /// Throws std::invalid_argument unless pi, A and B are consistent probability tables.
  void validate() const;
};

using Observations = std::vector<int>;

/// pi = [0.5, 0.5], A = 0.5 everywhere, B = [[.2,.3,.2,.3],[.2,.2,.3,.3]].
HmmModel default_initial_model();

/// Scaled forward pass; -inf when the sequence has zero probability.
double log_likelihood(const HmmModel& model, std::span<const int> observations);

struct FitOptions {
  int n_iter = 10;
  int jobs = 1;
};

/// Baum-Welch over all sequences at once: per-sequence expected counts are
/// summed in input order and the parameters re-estimated, for exactly
/// `n_iter` iterations.
HmmModel fit(std::span<const Observations> sequences, const HmmModel& init, const FitOptions& options = {});

/// Most probable state path in log space; ties go to the lower state index.
std::vector<int> viterbi(const HmmModel& model, std::span<const int> observations);

/// log P(observations, path | model).
double path_log_probability(const HmmModel& model, std::span<const int> observations, std::span<const int> path);

enum class SymptomState : std::uint8_t { Low = 0, High = 1 };

struct StateSemantics {
  int high_state = 1;
  int low_state() const { return 1 - high_state; }
  friend bool operator==(const StateSemantics&, const StateSemantics&) = default;
};

/// The high symptom state is the one more likely to emit Negative; on a tie,
/// the one less likely to emit Silence; then the lower index.
StateSemantics assign_semantics(const HmmModel& model);

struct DecodedSequence {
  std::string user_id;
  std::vector<SymptomState> states;  ///< oldest day first
  StateSemantics semantics;
};

DecodedSequence decode(const HmmModel& model, const StateSemantics& semantics, std::string user_id,
                       std::span<const int> observations);

/// High iff at least x of the final y days were decoded as the high state.
struct Criterion {
  int x = 1;
  int y = 14;
};

BinaryLabel classify_user(const DecodedSequence& decoded, const Criterion& criterion);

struct SweepRow {
  Criterion criterion;
  ClassMetrics metrics;
};

SweepRow evaluate_criterion(std::span<const DecodedSequence> decodes, std::span<const BinaryLabel> labels,
                            const Criterion& criterion);

/// All x in `xs` and y in `ys` with x <= y, ordered by y then x.
std::vector<SweepRow> sweep_criteria(std::span<const DecodedSequence> decodes, std::span<const BinaryLabel> labels,
                                     std::span<const int> xs = std::vector<int>{1, 2, 3, 4, 5, 6, 7},
                                     std::span<const int> ys = std::vector<int>{7, 14});

/// Pooled consecutive-day symbol transitions of a group, row-normalized.
Eigen::Matrix4d observation_transition_table(std::span<const DailySeries> group);

nlohmann::json to_json(const HmmModel& model, const StateSemantics& semantics);
HmmModel hmm_from_json(const nlohmann::json& j, StateSemantics* semantics = nullptr);

}  // namespace moodscope
