#include <gtest/gtest.h>

#include <fowr/designer.hpp>
#include <fowr/io.hpp>

using namespace fowr;

namespace {

std::vector<std::pair<int, int>> pairs(const DesignRecommendation& r) {
  std::vector<std::pair<int, int>> out;
  for (const auto& d : r.designs) out.emplace_back(d.subjects, d.repetitions);
  return out;
}

LikelihoodGrid uniform_grid(double value) {
  LikelihoodGrid g;
  for (int n = 1; n <= 8; ++n) g.subjects.push_back(n);
  for (int r = 1; r <= 10; ++r) g.repetitions.push_back(r);
  g.percent.assign(80, value);
  g.percent[0] = std::nullopt;
  g.trials.assign(80, 100);
  return g;
}

using P = std::vector<std::pair<int, int>>;

}  // namespace

TEST(Designer, ReproducesTheFifteenSubjectDesigns) {
  const auto g = io::read_grid(FOWR_FIXTURES "/grid_15.json");
  const auto r = recommend(g, EquivalenceTarget::fifteen_subjects);
  EXPECT_EQ(pairs(r), (P{{3, 5}, {4, 4}, {5, 3}}));
  for (const auto& d : r.designs) EXPECT_GE(d.likelihood, 95.0);
}

TEST(Designer, ReproducesTheTwentyFourSubjectDesigns) {
  const auto g = io::read_grid(FOWR_FIXTURES "/grid_24.json");
  EXPECT_EQ(pairs(recommend(g, EquivalenceTarget::twenty_four_subjects)), (P{{5, 6}, {6, 5}}));
}

TEST(Designer, UniformGridCollapsesToTheSmallestDesign) {
  EXPECT_EQ(pairs(recommend(uniform_grid(100.0), EquivalenceTarget::fifteen_subjects)), (P{{2, 2}}));
}

TEST(Designer, EmptyRecommendationCarriesADiagnostic) {
  const auto r = recommend(uniform_grid(50.0), EquivalenceTarget::fifteen_subjects);
  EXPECT_TRUE(r.designs.empty());
  EXPECT_FALSE(r.note.empty());
}

TEST(Designer, NoDesignIsDominated) {
  for (const char* f : {"/grid_15.json", "/grid_24.json"}) {
    const auto g = io::read_grid(std::string(FOWR_FIXTURES) + f);
    for (double threshold : {80.0, 90.0, 95.0, 97.0})
      for (int hi : {4, 6, 8}) {
        DesignOptions opt;
        opt.threshold = threshold;
        opt.max_subjects = hi;
        const auto r = recommend(g, g.target, opt);
        for (const auto& a : r.designs)
          for (const auto& b : r.designs)
            if (!(a == b)) EXPECT_FALSE(b.subjects <= a.subjects && b.repetitions <= a.repetitions);
      }
  }
}

TEST(Designer, LargerMarginNeverLowersRepetitions) {
  const auto g = uniform_grid(100.0);
  int previous = 0;
  for (int margin = 0; margin <= 3; ++margin) {
    DesignOptions opt;
    opt.margin = margin;
    const auto r = recommend(g, EquivalenceTarget::fifteen_subjects, opt);
    ASSERT_EQ(r.designs.size(), 1u);
    EXPECT_GE(r.designs[0].repetitions, previous);
    previous = r.designs[0].repetitions;
  }
  DesignOptions bad;
  bad.margin = -1;
  EXPECT_THROW(recommend(g, EquivalenceTarget::fifteen_subjects, bad), invalid_parameter);
}

TEST(Designer, MarginCellBelowThresholdMovesToMoreRepetitions) {
  auto g = uniform_grid(0.0);
  // N = 3: R = 2 reaches 96 but R = 3 drops to 90; R = 4 and 5 hold
  const auto set = [&](int n, int r, double v) { g.percent[g.cell(static_cast<std::size_t>(r - 1), static_cast<std::size_t>(n - 1))] = v; };
  set(3, 2, 96);
  set(3, 3, 90);
  set(3, 4, 97);
  set(3, 5, 98);
  EXPECT_EQ(pairs(recommend(g, EquivalenceTarget::fifteen_subjects)), (P{{3, 5}}));
}

TEST(Designer, Defaults) {
  EXPECT_EQ(pairs(default_recommendation("15")), (P{{4, 4}}));
  EXPECT_EQ(pairs(default_recommendation("24")), (P{{5, 6}, {6, 5}}));
  EXPECT_FALSE(default_recommendation("24").note.empty());
  EXPECT_THROW(default_recommendation("7"), invalid_parameter);
}
