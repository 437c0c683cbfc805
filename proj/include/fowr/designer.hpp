#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "confusion.hpp"
#include "error.hpp"

namespace fowr {

struct Design {
  int subjects = 0;
  int repetitions = 0;         // after the safety margin
  double likelihood = 0.0;     // grid percentage at the pre-margin repetition count
  std::optional<double> likelihood_with_margin;

  bool operator==(const Design& o) const { return subjects == o.subjects && repetitions == o.repetitions; }
};

struct DesignRecommendation {
  EquivalenceTarget target = EquivalenceTarget::fifteen_subjects;
  std::vector<Design> designs;  // ascending in subjects
  int margin = 1;
  std::string note;             // diagnostic when empty, provenance for defaults
};

struct DesignOptions {
  int margin = 1;            // repetitions added beyond the minimum
  double threshold = 95.0;   // percent of trials that must reach equivalence
  int min_subjects = 2;
  int max_subjects = 6;      // larger panels are not "few observers"
};

/// For each panel size N in range, the fewest repetitions R whose cell
/// reaches the threshold and whose R + margin cell (when the grid has it)
/// does too; the design is (N, R + margin). Designs dominated by another (no
/// more subjects and no more repetitions) are dropped.
inline DesignRecommendation recommend(const LikelihoodGrid& grid, EquivalenceTarget target, DesignOptions opt = {}) {
  if (opt.margin < 0) throw invalid_parameter("margin must be non-negative");
  if (grid.percent.size() != grid.subjects.size() * grid.repetitions.size())
    throw invalid_parameter("likelihood grid is malformed");
  DesignRecommendation out;
  out.target = target;
  out.margin = opt.margin;

  std::vector<std::size_t> rows(grid.repetitions.size());
  for (std::size_t k = 0; k < rows.size(); ++k) rows[k] = k;
  std::sort(rows.begin(), rows.end(), [&](auto a, auto b) { return grid.repetitions[a] < grid.repetitions[b]; });

  std::vector<Design> candidates;
  for (std::size_t col = 0; col < grid.subjects.size(); ++col) {
    const int n = grid.subjects[col];
    if (n < opt.min_subjects || n > opt.max_subjects) continue;
    for (std::size_t row : rows) {
      const auto& p = grid.percent[grid.cell(row, col)];
      if (!p || *p < opt.threshold) continue;
      Design d;
      d.subjects = n;
      d.repetitions = grid.repetitions[row] + opt.margin;
      d.likelihood = *p;
      for (std::size_t r2 = 0; r2 < grid.repetitions.size(); ++r2)
        if (grid.repetitions[r2] == d.repetitions) d.likelihood_with_margin = grid.percent[grid.cell(r2, col)];
      // the design actually run must also reach the threshold where the grid covers it
      if (opt.margin > 0 && d.likelihood_with_margin && *d.likelihood_with_margin < opt.threshold) continue;
      candidates.push_back(d);
      break;
    }
  }
  for (const auto& d : candidates) {
    const bool dominated = std::any_of(candidates.begin(), candidates.end(), [&](const Design& o) {
      return !(o == d) && o.subjects <= d.subjects && o.repetitions <= d.repetitions;
    });
    if (!dominated) out.designs.push_back(d);
  }
  std::sort(out.designs.begin(), out.designs.end(),
            [](const Design& a, const Design& b) { return a.subjects < b.subjects; });
  if (out.designs.empty())
    out.note = "no grid cell with " + std::to_string(opt.min_subjects) + ".." + std::to_string(opt.max_subjects) +
               " subjects reaches " + std::to_string(opt.threshold) + "% equivalence";
  return out;
}

/// Headline designs without computing a grid.
inline DesignRecommendation default_recommendation(EquivalenceTarget target) {
  DesignRecommendation out;
  out.target = target;
  if (target == EquivalenceTarget::fifteen_subjects) {
    out.designs = {{4, 4, 97.0, 97.0}};
    out.note = "4 subjects x 4 repetitions matches a 15-subject test";
  } else {
    out.designs = {{5, 6, 97.0, 98.0}, {6, 5, 96.0, 99.0}};
    out.note =
        "grid-derived 24-subject designs; the summary wording elsewhere reads '5 subjects scoring 5 times', "
        "whose cell (5,5) is 97% before any margin";
  }
  return out;
}

inline DesignRecommendation default_recommendation(const std::string& label) {
  return default_recommendation(parse_target(label));
}

}  // namespace fowr
