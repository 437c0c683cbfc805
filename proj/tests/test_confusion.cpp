#include <gtest/gtest.h>

#include <fowr/confusion.hpp>
#include <fowr/observer_model.hpp>

#include "oracles.hpp"

using namespace fowr;

namespace {

Verdict oracle_verdict(const std::vector<double>& a, const std::vector<double>& b, double alpha) {
  const double t = oracle::paired_t(a, b);
  double md = 0;
  for (std::size_t k = 0; k < a.size(); ++k) md += a[k] - b[k];
  if (std::isnan(t)) return md == 0 ? Verdict::tie : (md > 0 ? Verdict::a_better : Verdict::b_better);
  if (oracle::t_two_sided_p(t, static_cast<double>(a.size() - 1)) >= alpha) return Verdict::tie;
  return t > 0 ? Verdict::a_better : Verdict::b_better;
}

RatingDataset sim(std::size_t subjects, std::size_t stimuli, int reps, std::uint64_t seed,
                  std::vector<double> psi = {}) {
  PanelSpec spec;
  spec.subjects = subjects;
  spec.stimuli = stimuli;
  spec.repetitions = reps;
  spec.psi = std::move(psi);
  spec.seed = seed;
  return simulate_panel(spec).ratings;
}

}  // namespace

TEST(DecidePair, MatchesDirectComputation) {
  oracle::gen_t g{31};
  std::uniform_int_distribution<std::size_t> len(2, 6);
  for (int k = 0; k < 500; ++k) {
    const std::size_t n = len(g);
    const auto a = oracle::random_votes(g, n), b = oracle::random_votes(g, n);
    const auto v = decide_pair(a, b);
    EXPECT_EQ(v.verdict, oracle_verdict(a, b, 0.05));
    const double t = oracle::paired_t(a, b);
    if (!std::isnan(t)) EXPECT_NEAR(v.p, oracle::t_two_sided_p(t, static_cast<double>(n - 1)), 1e-8);
  }
}

TEST(DecidePair, Degenerate) {
  const std::vector<double> a{4, 4, 4}, b{3, 3, 3};
  const auto v = decide_pair(a, b);
  EXPECT_TRUE(v.degenerate);
  EXPECT_EQ(v.verdict, Verdict::a_better);
  EXPECT_EQ(decide_pair(b, a).verdict, Verdict::b_better);
  EXPECT_EQ(decide_pair(a, a).verdict, Verdict::tie);
  EXPECT_THROW(decide_pair(std::vector<double>{1}, std::vector<double>{2}), invalid_parameter);
  EXPECT_THROW(decide_pair(a, std::vector<double>{1, 2}), length_mismatch);
}

TEST(DecidePair, Antisymmetric) {
  oracle::gen_t g{5};
  for (int k = 0; k < 100; ++k) {
    const auto a = oracle::random_votes(g, 8), b = oracle::random_votes(g, 8);
    EXPECT_EQ(static_cast<int>(decide_pair(a, b).verdict), -static_cast<int>(decide_pair(b, a).verdict));
  }
}

TEST(PairVerdicts, AgreeWithDecidePair) {
  const auto ds = sim(4, 12, 3, 8);
  std::vector<std::size_t> all(12);
  for (std::size_t j = 0; j < 12; ++j) all[j] = j;
  const auto u = detail::pairing_units(ds, all);
  ASSERT_EQ(u.n_units, 12u);
  const auto v = pair_verdicts(u, stats::critical_table(0.05));
  std::size_t k = 0;
  for (std::size_t a = 0; a < 12; ++a)
    for (std::size_t b = a + 1; b < 12; ++b, ++k) {
      std::vector<double> va, vb;
      for (std::size_t x = 0; x < u.n_units; ++x) {
        va.push_back(u.at(a, x));
        vb.push_back(u.at(b, x));
      }
      EXPECT_EQ(v[k], decide_pair(va, vb).verdict);
    }
}

TEST(PairingUnits, FallsBackToSubjectMeansForRaggedRepetitions) {
  std::vector<RatingRecord> recs;
  auto add = [&](std::string s, std::string p, int r, int v) {
    recs.push_back({s, p, r, AcrVote{v}, "", "", "", std::nullopt, std::nullopt});
  };
  add("a", "x", 1, 2);
  add("a", "x", 2, 4);
  add("a", "y", 1, 5);
  add("a", "y", 2, 5);
  add("b", "x", 1, 1);
  add("b", "y", 1, 3);
  const RatingDataset ds(recs);
  const auto u = detail::pairing_units(ds, {0, 1});
  EXPECT_EQ(u.n_units, 2u);
  EXPECT_DOUBLE_EQ(u.at(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(u.at(1, 1), 3.0);
}

TEST(Confusion, SelfComparisonNeverDisagrees) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = sim(5, 20, 2, seed);
    const auto r = confusion(ds, ds);
    EXPECT_EQ(r.disagree, 0.0);
    EXPECT_EQ(r.n_pairs, 190u);
    EXPECT_DOUBLE_EQ(r.agree + r.tie_involved, 1.0);
  }
}

TEST(Confusion, TallyHandExample) {
  using V = Verdict;
  const std::vector<V> a{V::a_better, V::a_better, V::tie, V::b_better}, b{V::a_better, V::b_better, V::a_better, V::tie};
  const auto r = tally(a, b);
  EXPECT_EQ(r.n_agree, 1u);
  EXPECT_EQ(r.n_disagree, 1u);
  EXPECT_DOUBLE_EQ(r.agree, 0.25);
  EXPECT_DOUBLE_EQ(r.tie_involved, 0.5);
  EXPECT_THROW(tally({}, {}), invalid_parameter);
}

TEST(Confusion, EquivalenceThresholds) {
  ConfusionReport r;
  r.agree = 0.52;
  r.disagree = 0.01;
  EXPECT_TRUE(equivalence_verdict(r, EquivalenceTarget::fifteen_subjects));
  EXPECT_FALSE(equivalence_verdict(r, EquivalenceTarget::twenty_four_subjects));
  r.agree = 0.66;
  EXPECT_TRUE(equivalence_verdict(r, EquivalenceTarget::twenty_four_subjects));
  r.disagree = 0.0101;
  EXPECT_FALSE(equivalence_verdict(r, EquivalenceTarget::fifteen_subjects));
  EXPECT_EQ(parse_target("24"), EquivalenceTarget::twenty_four_subjects);
  EXPECT_THROW(parse_target("20"), invalid_parameter);
}

TEST(Confusion, NeedsSharedStimuli) {
  const auto a = sim(3, 5, 2, 1);
  std::vector<RatingRecord> recs;
  for (auto r : a.records()) {
    r.pvs_id = "other-" + r.pvs_id;
    recs.push_back(r);
  }
  EXPECT_THROW(confusion(a, RatingDataset(recs)), missing_data);
}

TEST(LikelihoodGrid, ShapeAndNotApplicableCells) {
  const auto test = sim(6, 15, 3, 2);
  const auto lab = sim(8, 15, 1, 3);
  GridConfig cfg;
  cfg.subjects = {1, 2, 3};
  cfg.repetitions = {1, 2};
  cfg.trials_per_lab = 4;
  const auto g = likelihood_grids(test, {&lab, &lab}, cfg);
  EXPECT_FALSE(g.fifteen.at(1, 1));
  EXPECT_TRUE(g.fifteen.at(2, 1));
  EXPECT_EQ(g.fifteen.trials[g.fifteen.cell(1, 2)], 8u);
  for (const auto& p : g.twenty_four.percent)
    if (p) EXPECT_LE(*p, *g.fifteen.percent[&p - g.twenty_four.percent.data()]);
  EXPECT_THROW(g.fifteen.at(4, 1), invalid_parameter);
}

TEST(LikelihoodGrid, IndependentOfThreadCount) {
  const auto test = sim(6, 15, 3, 2);
  const auto lab = sim(8, 15, 1, 3);
  GridConfig cfg;
  cfg.subjects = {2, 4};
  cfg.repetitions = {1, 3};
  cfg.trials_per_lab = 10;
  cfg.threads = 1;
  const auto a = likelihood_grids(test, {&lab}, cfg);
  cfg.threads = 3;
  const auto b = likelihood_grids(test, {&lab}, cfg);
  EXPECT_EQ(a.fifteen.percent, b.fifteen.percent);
  EXPECT_EQ(a.twenty_four.percent, b.twenty_four.percent);
}

TEST(LikelihoodGrid, RejectsCellsLargerThanThePanel) {
  const auto test = sim(3, 10, 2, 2);
  GridConfig cfg;
  cfg.subjects = {4};
  cfg.repetitions = {1};
  EXPECT_THROW(likelihood_grids(test, {&test}, cfg), invalid_parameter);
  cfg.subjects = {2};
  cfg.repetitions = {3};
  EXPECT_THROW(likelihood_grids(test, {&test}, cfg), invalid_parameter);
  EXPECT_THROW(likelihood_grids(test, {}, cfg), invalid_parameter);
}
