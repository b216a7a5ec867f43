#include "doctest.h"
#include "moodscope/hmm.hpp"
#include "oracles.hpp"

using namespace moodscope;

namespace {

std::vector<Observations> random_corpus(Rng& rng, const HmmModel& gen, int n, int length) {
  std::vector<Observations> out;
  for (int i = 0; i < n; ++i) out.push_back(oracle::sample_hmm(rng, gen.pi, gen.A, gen.B, length));
  return out;
}

/// Forward algorithm without scaling, for short sequences.
double naive_likelihood(const HmmModel& m, const std::vector<int>& obs) {
  Eigen::VectorXd alpha = m.pi.cwiseProduct(m.B.col(obs[0]));
  for (std::size_t t = 1; t < obs.size(); ++t) alpha = (m.A.transpose() * alpha).cwiseProduct(m.B.col(obs[t]));
  return alpha.sum();
}

DecodedSequence decoded(std::vector<SymptomState> states) { return {"u", std::move(states), {1}}; }

}  // namespace

TEST_CASE("default initial model") {
  const auto m = default_initial_model();
  CHECK_NOTHROW(m.validate());
  CHECK(m.B(0, 1) == doctest::Approx(0.3));
  CHECK(m.B(1, 2) == doctest::Approx(0.3));
  CHECK(m.A(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("model validation") {
  auto m = default_initial_model();
  m.A(0, 0) = 0.6;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = default_initial_model();
  m.B(1, 0) = -0.1;
  m.B(1, 1) = 0.5;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = default_initial_model();
  const Observations bad{0, 4};
  CHECK_THROWS(log_likelihood(m, bad));
}

TEST_CASE("scaled forward pass matches direct summation") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = oracle::random_hmm(rng, 2 + static_cast<int>(rng.uniform_int(0, 1)));
    const auto obs = oracle::sample_hmm(rng, m.pi, m.A, m.B, 1 + static_cast<int>(rng.uniform_int(0, 12)));
    CHECK(log_likelihood(m, obs) == doctest::Approx(std::log(naive_likelihood(m, obs))).epsilon(1e-10));
  }
  const Observations empty;
  CHECK(log_likelihood(default_initial_model(), empty) == 0.0);
}

TEST_CASE("Baum-Welch log-likelihood never decreases") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gen = oracle::random_hmm(rng);
    const auto corpus = random_corpus(rng, gen, 10, 60);
    const auto fitted = fit(corpus, oracle::random_hmm(rng), {20, 1});
    REQUIRE(fitted.log_likelihood.size() == 21);
    CHECK(fitted.n_iter == 20);
    for (std::size_t i = 1; i < fitted.log_likelihood.size(); ++i)
      CHECK(fitted.log_likelihood[i] >= fitted.log_likelihood[i - 1] - 1e-8);
    CHECK_NOTHROW(fitted.validate());
  }
}

TEST_CASE("fit runs exactly the requested iterations and is thread-count invariant") {
  Rng rng(6);
  const auto corpus = random_corpus(rng, oracle::random_hmm(rng), 25, 40);
  const auto one = fit(corpus, default_initial_model(), {10, 1});
  const auto four = fit(corpus, default_initial_model(), {10, 4});
  CHECK(one.n_iter == 10);
  CHECK(one.log_likelihood.size() == 11);
  CHECK(one.A == four.A);
  CHECK(one.B == four.B);
  CHECK(one.pi == four.pi);
}

TEST_CASE("Viterbi agrees with exhaustive search") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = oracle::random_hmm(rng);
    const auto obs = oracle::sample_hmm(rng, m.pi, m.A, m.B, 1 + static_cast<int>(rng.uniform_int(0, 7)));
    const auto path = viterbi(m, obs);
    const auto [best, best_lp] = oracle::brute_force_viterbi(m, obs);
    CHECK(oracle::path_log_prob(m, obs, path) == doctest::Approx(best_lp).epsilon(1e-12));
    CHECK(path_log_probability(m, obs, path) == doctest::Approx(best_lp).epsilon(1e-12));
  }
}

TEST_CASE("Viterbi ties go to the lower state") {
  const auto m = default_initial_model();
  // Symbol 3 is equally likely in both states, so every path ties.
  const Observations obs{3, 3, 3, 3};
  CHECK(viterbi(m, obs) == std::vector<int>{0, 0, 0, 0});
  const auto [best, lp] = oracle::brute_force_viterbi(m, obs);
  CHECK(best == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("state semantics") {
  auto m = default_initial_model();
  m.B << 0.1, 0.5, 0.1, 0.3,  //
      0.3, 0.1, 0.1, 0.5;
  CHECK(assign_semantics(m).high_state == 0);
  m.B << 0.3, 0.2, 0.1, 0.4,  //
      0.2, 0.2, 0.3, 0.3;
  CHECK(assign_semantics(m).high_state == 1);
  m.B.row(1) = m.B.row(0);
  CHECK(assign_semantics(m).high_state == 0);
  // Relabelling the states leaves the meaning attached to the same parameters.
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const auto r = oracle::random_hmm(rng);
    HmmModel swapped = r;
    swapped.B.row(0) = r.B.row(1);
    swapped.B.row(1) = r.B.row(0);
    CHECK(assign_semantics(swapped).high_state == 1 - assign_semantics(r).high_state);
  }
}

TEST_CASE("criterion counts high days in the final window") {
  using S = SymptomState;
  const auto d = decoded({S::High, S::High, S::Low, S::High, S::Low, S::High});
  CHECK(classify_user(d, {2, 3}) == BinaryLabel::High);
  CHECK(classify_user(d, {3, 3}) == BinaryLabel::Low);
  CHECK(classify_user(d, {4, 6}) == BinaryLabel::High);
  CHECK(classify_user(d, {1, 1}) == BinaryLabel::High);
  CHECK_THROWS_AS(classify_user(d, {4, 3}), std::invalid_argument);
  CHECK_THROWS_AS(classify_user(d, {1, 7}), std::invalid_argument);
}

TEST_CASE("predicted high users shrink as x grows") {
  Rng rng(12);
  std::vector<DecodedSequence> ds;
  for (int u = 0; u < 40; ++u) {
    std::vector<SymptomState> s;
    for (int t = 0; t < 30; ++t) s.push_back(rng.uniform() < 0.3 ? SymptomState::High : SymptomState::Low);
    ds.push_back(decoded(s));
  }
  for (int y : {7, 14}) {
    int prev = 1 << 30;
    for (int x = 1; x <= 7; ++x) {
      int n = 0;
      for (const auto& d : ds) n += classify_user(d, {x, y}) == BinaryLabel::High;
      CHECK(n <= prev);
      prev = n;
    }
  }
}

TEST_CASE("sweep ordering and metrics") {
  using S = SymptomState;
  const std::vector<DecodedSequence> ds{decoded(std::vector<S>(14, S::High)), decoded(std::vector<S>(14, S::Low))};
  const std::vector<BinaryLabel> labels{BinaryLabel::High, BinaryLabel::Low};
  const auto rows = sweep_criteria(ds, labels);
  REQUIRE(rows.size() == 14);
  CHECK(rows[0].criterion.y == 7);
  CHECK(rows[0].criterion.x == 1);
  CHECK(rows[7].criterion.y == 14);
  for (const auto& r : rows) CHECK(r.metrics.macro_f1 == doctest::Approx(1.0));
}

TEST_CASE("observation transition table") {
  DailySeries a;
  for (auto s : {MoodSymbol::Positive, MoodSymbol::Negative, MoodSymbol::Positive}) a.days.push_back({1.0, s, 1});
  const std::vector<DailySeries> group{a};
  const auto t = observation_transition_table(group);
  CHECK(t(0, 1) == doctest::Approx(1.0));
  CHECK(t(1, 0) == doctest::Approx(1.0));
  CHECK(t.row(3).isZero());
  CHECK_THROWS(observation_transition_table(std::span<const DailySeries>{}));
}

TEST_CASE("model JSON round trip") {
  Rng rng(5);
  const auto m = fit(random_corpus(rng, oracle::random_hmm(rng), 5, 20), default_initial_model());
  const auto sem = assign_semantics(m);
  StateSemantics back_sem;
  const auto back = hmm_from_json(to_json(m, sem), &back_sem);
  CHECK(back.A.isApprox(m.A, 1e-15));
  CHECK(back.B.isApprox(m.B, 1e-15));
  CHECK(back.pi.isApprox(m.pi, 1e-15));
  CHECK(back_sem == sem);
}
