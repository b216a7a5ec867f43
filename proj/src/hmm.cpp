#include "moodscope/hmm.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "moodscope/moodprofile.hpp"
#include "moodscope/parallel.hpp"

namespace moodscope {

namespace {

constexpr double kProbTolerance = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_distribution(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& what) {
  if (!row.allFinite() || (row.array() < 0.0).any()) throw std::invalid_argument(what + " has invalid entries");
  if (std::abs(row.sum() - 1.0) > kProbTolerance) throw std::invalid_argument(what + " does not sum to 1");
}

void check_observations(const HmmModel& model, std::span<const int> obs) {
  for (int o : obs)
    if (o < 0 || o >= model.symbols()) throw std::invalid_argument("observation symbol " + std::to_string(o) + " outside alphabet");
}

/// Expected counts contributed by one sequence.
struct SufficientStats {
  Eigen::VectorXd initial;
  Eigen::MatrixXd transitions;
  Eigen::VectorXd from_totals;  // sum of gamma over t < T-1
  Eigen::MatrixXd emissions;
  Eigen::VectorXd state_totals;  // sum of gamma over all t
  double log_likelihood = 0.0;

  explicit SufficientStats(Eigen::Index n, Eigen::Index m)
      : initial(Eigen::VectorXd::Zero(n)),
        transitions(Eigen::MatrixXd::Zero(n, n)),
        from_totals(Eigen::VectorXd::Zero(n)),
        emissions(Eigen::MatrixXd::Zero(n, m)),
        state_totals(Eigen::VectorXd::Zero(n)) {}

  SufficientStats& operator+=(const SufficientStats& o) {
    initial += o.initial;
    transitions += o.transitions;
    from_totals += o.from_totals;
    emissions += o.emissions;
    state_totals += o.state_totals;
    log_likelihood += o.log_likelihood;
    return *this;
  }
};

/// Scaled forward variables: each row of `alpha` sums to 1, `scale(t)` is the
/// normalizer, and log P(O) = sum log scale(t).
struct Forward {
  Eigen::MatrixXd alpha;  // T x N
  Eigen::VectorXd scale;
};

Forward forward(const HmmModel& model, std::span<const int> obs) {
  const auto T = static_cast<Eigen::Index>(obs.size());
  Forward f{Eigen::MatrixXd(T, model.states()), Eigen::VectorXd(T)};
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto o = obs[static_cast<std::size_t>(t)];
    if (t == 0)
      f.alpha.row(0) = model.pi.transpose().cwiseProduct(model.B.col(o).transpose());
    else
      f.alpha.row(t) = (f.alpha.row(t - 1) * model.A).cwiseProduct(model.B.col(o).transpose());
    f.scale(t) = f.alpha.row(t).sum();
    if (!(f.scale(t) > 0.0)) {
      f.scale(t) = 0.0;
      return f;
    }
    f.alpha.row(t) /= f.scale(t);
  }
  return f;
}

SufficientStats expected_counts(const HmmModel& model, std::span<const int> obs) {
  const auto T = static_cast<Eigen::Index>(obs.size());
  const auto N = model.states();
  SufficientStats s(N, model.symbols());
  const Forward f = forward(model, obs);
  if ((f.scale.array() <= 0.0).any())
    throw std::domain_error("sequence has zero probability under the current model");
  s.log_likelihood = f.scale.array().log().sum();

  Eigen::RowVectorXd beta = Eigen::RowVectorXd::Ones(N);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto o = obs[static_cast<std::size_t>(t)];
    const Eigen::RowVectorXd gamma = f.alpha.row(t).cwiseProduct(beta);
    s.state_totals += gamma.transpose();
    s.emissions.col(o) += gamma.transpose();
    if (t == 0) {
      s.initial = gamma.transpose();
      break;
    }
    s.from_totals += f.alpha.row(t - 1).transpose().cwiseProduct(
        model.A * (model.B.col(o).cwiseProduct(beta.transpose()))) / f.scale(t);
    // xi(t-1) = alpha(t-1)_i A_ij B_j(o_t) beta(t)_j / scale(t)
    const Eigen::RowVectorXd weighted = model.B.col(o).transpose().cwiseProduct(beta) / f.scale(t);
    s.transitions += (f.alpha.row(t - 1).transpose() * weighted).cwiseProduct(model.A);
    beta = (model.A * weighted.transpose()).transpose();
  }
  return s;
}

void reestimate(HmmModel& model, const SufficientStats& s, std::size_t n_sequences) {
  model.pi = s.initial / static_cast<double>(n_sequences);
  model.pi /= model.pi.sum();
  for (Eigen::Index i = 0; i < model.states(); ++i) {
    if (s.from_totals(i) > 0.0) {
      model.A.row(i) = s.transitions.row(i) / s.from_totals(i);
      model.A.row(i) /= model.A.row(i).sum();
    }
    if (s.state_totals(i) > 0.0) {
      model.B.row(i) = s.emissions.row(i) / s.state_totals(i);
      model.B.row(i) /= model.B.row(i).sum();
    }
  }
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

Eigen::MatrixXd elementwise_log(const Eigen::MatrixXd& m) { return m.unaryExpr(&safe_log); }

}  // namespace

void HmmModel::validate() const {
  const auto n = A.rows();
  if (n < 1 || A.cols() != n || pi.size() != n || B.rows() != n || B.cols() < 1)
    throw std::invalid_argument("HMM tables have inconsistent shapes");
  check_distribution(pi.transpose(), "initial distribution");
  for (Eigen::Index i = 0; i < n; ++i) {
    check_distribution(A.row(i), "transition row " + std::to_string(i));
    check_distribution(B.row(i), "emission row " + std::to_string(i));
  }
}

HmmModel default_initial_model() {
  HmmModel m;
  m.pi = Eigen::Vector2d(0.5, 0.5);
  m.A = Eigen::Matrix2d::Constant(0.5);
  m.B.resize(2, 4);
  m.B << 0.2, 0.3, 0.2, 0.3,  //
      0.2, 0.2, 0.3, 0.3;
  return m;
}

double log_likelihood(const HmmModel& model, std::span<const int> observations) {
  check_observations(model, observations);
  if (observations.empty()) return 0.0;
  const Forward f = forward(model, observations);
  if ((f.scale.array() <= 0.0).any()) return kNegInf;
  return f.scale.array().log().sum();
}

HmmModel fit(std::span<const Observations> sequences, const HmmModel& init, const FitOptions& options) {
  init.validate();
  if (sequences.empty()) throw std::invalid_argument("HMM fit needs at least one sequence");
  for (const auto& seq : sequences) {
    if (seq.empty()) throw std::invalid_argument("HMM fit: empty observation sequence");
    check_observations(init, seq);
  }
  if (options.n_iter < 0) throw std::invalid_argument("n_iter must be >= 0");

  HmmModel model = init;
  model.log_likelihood.clear();
  model.n_iter = 0;
  std::vector<SufficientStats> per_sequence(sequences.size(), SufficientStats(model.states(), model.symbols()));
  auto e_step = [&] {
    parallel_for(sequences.size(), options.jobs,
                 [&](std::size_t i) { per_sequence[i] = expected_counts(model, sequences[i]); });
    SufficientStats total(model.states(), model.symbols());
    for (const auto& s : per_sequence) total += s;
    return total;
  };
  for (int iter = 0; iter < options.n_iter; ++iter) {
    const auto stats = e_step();
    model.log_likelihood.push_back(stats.log_likelihood);
    reestimate(model, stats, sequences.size());
    ++model.n_iter;
  }
  double final_ll = 0.0;
  for (const auto& seq : sequences) final_ll += log_likelihood(model, seq);
  model.log_likelihood.push_back(final_ll);
  return model;
}

std::vector<int> viterbi(const HmmModel& model, std::span<const int> observations) {
  check_observations(model, observations);
  const auto T = static_cast<Eigen::Index>(observations.size());
  const auto N = model.states();
  if (T == 0) return {};
  const Eigen::MatrixXd log_a = elementwise_log(model.A);
  const Eigen::MatrixXd log_b = elementwise_log(model.B);
  const Eigen::VectorXd log_pi = elementwise_log(model.pi);

  Eigen::MatrixXd delta(T, N);
  Eigen::MatrixXi back(T, N);
  for (Eigen::Index j = 0; j < N; ++j) delta(0, j) = log_pi(j) + log_b(j, observations[0]);
  for (Eigen::Index t = 1; t < T; ++t) {
    const auto o = observations[static_cast<std::size_t>(t)];
    for (Eigen::Index j = 0; j < N; ++j) {
      double best = kNegInf;
      Eigen::Index arg = 0;
      for (Eigen::Index i = 0; i < N; ++i) {
        const double v = delta(t - 1, i) + log_a(i, j);
        if (v > best) {
          best = v;
          arg = i;
        }
      }
      delta(t, j) = best + log_b(j, o);
      back(t, j) = static_cast<int>(arg);
    }
  }
  std::vector<int> path(static_cast<std::size_t>(T));
  Eigen::Index last = 0;
  for (Eigen::Index j = 1; j < N; ++j)
    if (delta(T - 1, j) > delta(T - 1, last)) last = j;
  path.back() = static_cast<int>(last);
  for (Eigen::Index t = T - 1; t > 0; --t)
    path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
  return path;
}

double path_log_probability(const HmmModel& model, std::span<const int> observations, std::span<const int> path) {
  if (observations.size() != path.size()) throw std::invalid_argument("path and observations differ in length");
  if (observations.empty()) return 0.0;
  double lp = safe_log(model.pi(path[0])) + safe_log(model.B(path[0], observations[0]));
  for (std::size_t t = 1; t < path.size(); ++t)
    lp += safe_log(model.A(path[t - 1], path[t])) + safe_log(model.B(path[t], observations[t]));
  return lp;
}

StateSemantics assign_semantics(const HmmModel& model) {
  if (model.states() != 2 || model.symbols() != kSymbolCount)
    throw std::invalid_argument("state semantics need a 2-state model over the 4 mood symbols");
  const int neg = index_of(MoodSymbol::Negative);
  const int sil = index_of(MoodSymbol::Silence);
  if (model.B(0, neg) != model.B(1, neg)) return {model.B(0, neg) > model.B(1, neg) ? 0 : 1};
  if (model.B(0, sil) != model.B(1, sil)) return {model.B(0, sil) < model.B(1, sil) ? 0 : 1};
  return {0};
}

DecodedSequence decode(const HmmModel& model, const StateSemantics& semantics, std::string user_id,
                       std::span<const int> observations) {
  DecodedSequence d{std::move(user_id), {}, semantics};
  const auto path = viterbi(model, observations);
  d.states.reserve(path.size());
  for (int s : path) d.states.push_back(s == semantics.high_state ? SymptomState::High : SymptomState::Low);
  return d;
}

BinaryLabel classify_user(const DecodedSequence& decoded, const Criterion& criterion) {
  if (criterion.y < 1 || criterion.x < 1 || criterion.x > criterion.y)
    throw std::invalid_argument("criterion needs 1 <= x <= y");
  if (decoded.states.size() < static_cast<std::size_t>(criterion.y))
    throw std::invalid_argument("decoded sequence shorter than criterion window");
  int high = 0;
  for (auto it = decoded.states.end() - criterion.y; it != decoded.states.end(); ++it)
    if (*it == SymptomState::High) ++high;
  return high >= criterion.x ? BinaryLabel::High : BinaryLabel::Low;
}

SweepRow evaluate_criterion(std::span<const DecodedSequence> decodes, std::span<const BinaryLabel> labels,
                            const Criterion& criterion) {
  if (decodes.size() != labels.size()) throw std::invalid_argument("decodes and labels differ in length");
  std::vector<BinaryLabel> predictions;
  predictions.reserve(decodes.size());
  for (const auto& d : decodes) predictions.push_back(classify_user(d, criterion));
  return {criterion, classification_metrics(predictions, labels)};
}

std::vector<SweepRow> sweep_criteria(std::span<const DecodedSequence> decodes, std::span<const BinaryLabel> labels,
                                     std::span<const int> xs, std::span<const int> ys) {
  std::vector<SweepRow> rows;
  for (int y : ys)
    for (int x : xs)
      if (x <= y) rows.push_back(evaluate_criterion(decodes, labels, {x, y}));
  return rows;
}

Eigen::Matrix4d observation_transition_table(std::span<const DailySeries> group) {
  if (group.empty()) throw std::invalid_argument("observation transition table of an empty group");
  Eigen::Matrix4d counts = Eigen::Matrix4d::Zero();
  for (const auto& series : group) {
    const auto symbols = series.symbols();
    counts += transition_counts(symbols);
  }
  return row_normalize(counts);
}

nlohmann::json to_json(const HmmModel& model, const StateSemantics& semantics) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      auto row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  nlohmann::json j;
  j["pi"] = std::vector<double>(model.pi.data(), model.pi.data() + model.pi.size());
  j["A"] = matrix(model.A);
  j["B"] = matrix(model.B);
  j["n_iter"] = model.n_iter;
  j["log_likelihood"] = model.log_likelihood;
  j["semantics"] = {{"high_state", semantics.high_state}, {"low_state", semantics.low_state()}};
  return j;
}

HmmModel hmm_from_json(const nlohmann::json& j, StateSemantics* semantics) {
  HmmModel m;
  const auto pi = j.at("pi").get<std::vector<double>>();
  m.pi = Eigen::Map<const Eigen::VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
  auto matrix = [](const nlohmann::json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
    Eigen::MatrixXd out(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
        throw std::invalid_argument("ragged matrix in model file");
      for (Eigen::Index k = 0; k < c; ++k) out(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
    return out;
  };
  m.A = matrix(j.at("A"));
  m.B = matrix(j.at("B"));
  m.n_iter = j.value("n_iter", 0);
  if (j.contains("log_likelihood")) m.log_likelihood = j["log_likelihood"].get<std::vector<double>>();
  m.validate();
  if (semantics) {
    if (j.contains("semantics"))
      semantics->high_state = j["semantics"].at("high_state").get<int>();
    else
      *semantics = assign_semantics(m);
  }
  return m;
}

}  // namespace moodscope
