#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace fowr {

enum class Verdict : std::int8_t { b_better = -1, tie = 0, a_better = 1 };

inline const char* to_string(Verdict v) {
  return v == Verdict::a_better ? "A-better" : v == Verdict::b_better ? "B-better" : "tie";
}

struct PairVerdict {
  Verdict verdict = Verdict::tie;
  double t = 0.0;  // infinite when degenerate with a nonzero difference
  double p = 1.0;
  double mean_difference = 0.0;  // mean of A - B
  std::size_t n = 0;
  bool degenerate = false;
};

/// Two-sided paired Student t-test of A against B. `a[k]` and `b[k]` are
/// the votes of one (subject, repetition) unit.
inline PairVerdict decide_pair(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() != b.size()) throw length_mismatch("paired votes differ in length");
  if (a.size() < 2) throw invalid_parameter("paired t-test needs at least two vote pairs");
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_parameter("alpha must lie in (0, 1)");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  const auto t = stats::t_test_zero_mean(d);
  PairVerdict out;
  out.t = t.t;
  out.p = t.p;
  out.mean_difference = t.mean;
  out.n = d.size();
  out.degenerate = t.degenerate;
  const bool strict = t.degenerate ? t.mean != 0.0 : t.p < alpha;
  if (strict) out.verdict = t.mean > 0.0 ? Verdict::a_better : Verdict::b_better;
  return out;
}

/// Paired units of one experiment: units[u][k] is the score of stimulus k
/// for unit u (a subject's repetition, or a subject's mean vote).
struct PairingUnits {
  std::size_t n_stimuli = 0;
  std::vector<double> by_stimulus;  // row k holds unit scores for stimulus k
  std::size_t n_units = 0;

  double at(std::size_t stimulus, std::size_t unit) const { return by_stimulus[stimulus * n_units + unit]; }
};

namespace detail {

/// Units for the given stimulus indices. When every subject contributes the
/// same number of complete repetitions the unit is (subject, repetition);
/// otherwise it is the subject, scored by its mean vote.
inline PairingUnits pairing_units(const RatingDataset& ds, const std::vector<std::size_t>& stimuli) {
  PairingUnits u;
  u.n_stimuli = stimuli.size();
  std::vector<std::vector<double>> units;
  bool uniform = ds.subject_count() > 0;
  for (std::size_t i = 0; i < ds.subject_count() && uniform; ++i) {
    if (ds.repetitions(i) != ds.repetitions(0)) uniform = false;
    for (int r = 1; r <= ds.repetitions(i) && uniform; ++r)
      for (std::size_t j : stimuli)
        if (!ds.vote(i, r, j)) {
          uniform = false;
          break;
        }
  }
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    if (uniform) {
      for (int r = 1; r <= ds.repetitions(i); ++r) {
        std::vector<double> row;
        for (std::size_t j : stimuli) row.push_back(ds.vote(i, r, j));
        units.push_back(std::move(row));
      }
    } else {
      std::vector<double> row;
      for (std::size_t j : stimuli) {
        double s = 0.0, n = 0.0;
        for (int r = 1; r <= ds.repetitions(i); ++r)
          if (int v = ds.vote(i, r, j)) {
            s += v;
            n += 1.0;
          }
        if (n == 0.0)
          throw missing_data("subject '" + ds.subjects()[i] + "' did not vote stimulus '" + ds.catalog()[j].pvs_id + "'");
        row.push_back(s / n);
      }
      units.push_back(std::move(row));
    }
  }
  u.n_units = units.size();
  u.by_stimulus.resize(u.n_stimuli * u.n_units);
  for (std::size_t k = 0; k < u.n_stimuli; ++k)
    for (std::size_t x = 0; x < u.n_units; ++x) u.by_stimulus[k * u.n_units + x] = units[x][k];
  return u;
}

}  // namespace detail

/// Verdicts on every unordered stimulus pair (a < b), in row-major pair
/// order. Same decision rule as decide_pair, with the p-value comparison
/// replaced by the equivalent critical-t comparison.
inline std::vector<Verdict> pair_verdicts(const PairingUnits& u, const stats::critical_table& crit) {
  if (u.n_units < 2) throw invalid_parameter("pairwise verdicts need at least two paired units");
  const std::size_t J = u.n_stimuli, n = u.n_units;
  const double tc = crit(n - 1);
  const double nn = static_cast<double>(n);
  std::vector<Verdict> out;
  out.reserve(J * (J - 1) / 2);
  std::vector<double> d(n);
  for (std::size_t a = 0; a + 1 < J; ++a) {
    const double* ra = &u.by_stimulus[a * n];
    for (std::size_t b = a + 1; b < J; ++b) {
      const double* rb = &u.by_stimulus[b * n];
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        d[k] = ra[k] - rb[k];
        s += d[k];
      }
      const double m = s / nn;
      double ss = 0.0;
      for (std::size_t k = 0; k < n; ++k) ss += (d[k] - m) * (d[k] - m);
      Verdict v = Verdict::tie;
      if (ss <= 0.0) {
        if (m != 0.0) v = m > 0.0 ? Verdict::a_better : Verdict::b_better;
      } else {
        const double t = m / std::sqrt(ss / (nn - 1.0) / nn);
        if (std::fabs(t) > tc) v = t > 0.0 ? Verdict::a_better : Verdict::b_better;
      }
      out.push_back(v);
    }
  }
  return out;
}

enum class EquivalenceTarget { fifteen_subjects, twenty_four_subjects };

inline EquivalenceTarget parse_target(const std::string& label) {
  if (label == "15" || label == "15-subject") return EquivalenceTarget::fifteen_subjects;
  if (label == "24" || label == "24-subject") return EquivalenceTarget::twenty_four_subjects;
  throw invalid_parameter("unknown equivalence target '" + label + "' (expected 15 or 24)");
}

inline const char* to_string(EquivalenceTarget t) {
  return t == EquivalenceTarget::fifteen_subjects ? "15" : "24";
}

/// Agreement needed to match a conventional panel of that size; the
/// disagreement ceiling is 1% for both.
inline double required_agreement(EquivalenceTarget t) {
  return t == EquivalenceTarget::fifteen_subjects ? 0.52 : 0.66;
}
inline constexpr double max_disagreement = 0.01;

struct ConfusionReport {
  double agree = 0.0;
  double disagree = 0.0;
  double tie_involved = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_agree = 0;
  std::size_t n_disagree = 0;
  bool equivalent_15 = false;
  bool equivalent_24 = false;
};

inline bool equivalence_verdict(const ConfusionReport& r, EquivalenceTarget target) {
  return r.agree >= required_agreement(target) && r.disagree <= max_disagreement;
}

inline ConfusionReport tally(const std::vector<Verdict>& a, const std::vector<Verdict>& b) {
  if (a.size() != b.size()) throw length_mismatch("verdict tables differ in size");
  if (a.empty()) throw invalid_parameter("no stimulus pairs to compare");
  ConfusionReport r;
  r.n_pairs = a.size();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] == Verdict::tie || b[k] == Verdict::tie) continue;
    if (a[k] == b[k])
      ++r.n_agree;
    else
      ++r.n_disagree;
  }
  const double n = static_cast<double>(r.n_pairs);
  r.agree = static_cast<double>(r.n_agree) / n;
  r.disagree = static_cast<double>(r.n_disagree) / n;
  r.tie_involved = static_cast<double>(r.n_pairs - r.n_agree - r.n_disagree) / n;
  r.equivalent_15 = equivalence_verdict(r, EquivalenceTarget::fifteen_subjects);
  r.equivalent_24 = equivalence_verdict(r, EquivalenceTarget::twenty_four_subjects);
  return r;
}

namespace detail {

/// Stimuli present in the test catalog (optionally one content group) and
/// in every other dataset; indices into `test`.
inline std::vector<std::size_t> shared_stimuli(const RatingDataset& test, const std::vector<const RatingDataset*>& others,
                                               const std::string& content_group) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < test.stimulus_count(); ++j) {
    const auto& s = test.catalog()[j];
    if (!content_group.empty() && s.content_group != content_group) continue;
    bool everywhere = true;
    for (const auto* o : others) everywhere = everywhere && o->stimulus_index(s.pvs_id).has_value();
    if (everywhere) out.push_back(j);
  }
  return out;
}

inline std::vector<std::size_t> remap(const RatingDataset& from, const std::vector<std::size_t>& idx,
                                      const RatingDataset& to) {
  std::vector<std::size_t> out;
  for (std::size_t j : idx) out.push_back(*to.stimulus_index(from.catalog()[j].pvs_id));
  return out;
}

}  // namespace detail

/// Pairwise conclusions of two experiments over their shared stimuli.
inline ConfusionReport confusion(const RatingDataset& test, const RatingDataset& reference, double alpha = 0.05,
                                 const std::string& content_group = "") {
  const auto stim = detail::shared_stimuli(test, {&reference}, content_group);
  if (stim.size() < 2) throw missing_data("confusion analysis needs at least two shared stimuli");
  stats::critical_table crit(alpha);
  const auto va = pair_verdicts(detail::pairing_units(test, stim), crit);
  const auto vb = pair_verdicts(detail::pairing_units(reference, detail::remap(test, stim, reference)), crit);
  return tally(va, vb);
}

/// Percentage of trials meeting one equivalence target, per (N, R) cell.
struct LikelihoodGrid {
  EquivalenceTarget target = EquivalenceTarget::fifteen_subjects;
  std::vector<int> subjects;     // column values of N
  std::vector<int> repetitions;  // row values of R
  std::vector<std::optional<double>> percent;  // row-major [R][N]; empty = not applicable
  std::vector<std::size_t> trials;              // per cell

  std::size_t cell(std::size_t row, std::size_t col) const { return row * subjects.size() + col; }

  std::optional<double> at(int n, int r) const {
    for (std::size_t row = 0; row < repetitions.size(); ++row)
      if (repetitions[row] == r)
        for (std::size_t col = 0; col < subjects.size(); ++col)
          if (subjects[col] == n) return percent[cell(row, col)];
    throw invalid_parameter("grid has no cell (" + std::to_string(n) + ", " + std::to_string(r) + ")");
  }
};

struct LikelihoodGrids {
  LikelihoodGrid fifteen;
  LikelihoodGrid twenty_four;

  const LikelihoodGrid& get(EquivalenceTarget t) const {
    return t == EquivalenceTarget::fifteen_subjects ? fifteen : twenty_four;
  }
};

struct GridConfig {
  std::vector<int> subjects{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> repetitions{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t trials_per_lab = 50;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::string content_group;  // restrict to one group (empty = all shared stimuli)
  unsigned threads = 0;
};

/// Equivalence likelihood of N-subject, R-repetition designs. Each trial
/// draws N subjects and, per subject, R of its repetitions at random, then
/// runs the confusion analysis against one ground-truth lab. Both targets
/// are tallied from the same trials.
inline LikelihoodGrids likelihood_grids(const RatingDataset& test, const std::vector<const RatingDataset*>& labs,
                                        const GridConfig& cfg) {
  if (labs.empty()) throw invalid_parameter("likelihood grid needs at least one ground-truth lab");
  if (cfg.trials_per_lab < 1) throw invalid_parameter("need at least one trial per lab");
  const auto stim = detail::shared_stimuli(test, labs, cfg.content_group);
  if (stim.size() < 2) throw missing_data("likelihood grid needs at least two shared stimuli");

  for (int n : cfg.subjects)
    for (int r : cfg.repetitions) {
      if (n < 1 || r < 1) throw invalid_parameter("grid N and R must be >= 1");
      std::size_t available = 0;
      for (std::size_t i = 0; i < test.subject_count(); ++i) available += test.repetitions(i) >= r;
      if (static_cast<std::size_t>(n) > available)
        throw invalid_parameter("grid cell (" + std::to_string(n) + ", " + std::to_string(r) + ") exceeds the " +
                                std::to_string(available) + " subjects with enough repetitions");
    }

  stats::critical_table crit(cfg.alpha);
  std::vector<std::vector<Verdict>> lab_verdicts;
  for (const auto* lab : labs)
    lab_verdicts.push_back(pair_verdicts(detail::pairing_units(*lab, detail::remap(test, stim, *lab)), crit));

  const std::size_t cols = cfg.subjects.size(), rows = cfg.repetitions.size();
  const std::size_t per_cell = labs.size() * cfg.trials_per_lab;
  const std::size_t J = stim.size();
  std::vector<std::int8_t> pass15(rows * cols * per_cell, 0), pass24(pass15.size(), 0);

  parallel_for(
      rows * cols * per_cell,
      [&](std::size_t job) {
        const std::size_t c = job / per_cell, k = job % per_cell;
        const std::size_t l = k / cfg.trials_per_lab;
        const int n = cfg.subjects[c % cols], R = cfg.repetitions[c / cols];
        if (n * R < 2) return;
        rng_t rng = substream(substream_seed(cfg.seed, c), k);
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < test.subject_count(); ++i)
          if (test.repetitions(i) >= R) eligible.push_back(i);
        PairingUnits u;
        u.n_stimuli = J;
        u.n_units = static_cast<std::size_t>(n * R);
        u.by_stimulus.resize(J * u.n_units);
        std::size_t unit = 0;
        for (std::size_t p : draw_without_replacement(rng, eligible.size(), static_cast<std::size_t>(n))) {
          const std::size_t i = eligible[p];
          for (std::size_t rr : draw_without_replacement(rng, static_cast<std::size_t>(test.repetitions(i)),
                                                         static_cast<std::size_t>(R))) {
            for (std::size_t s = 0; s < J; ++s) {
              const int v = test.vote(i, static_cast<int>(rr) + 1, stim[s]);
              if (!v) throw invalid_dataset("likelihood grid needs complete sessions (subject '" + test.subjects()[i] + "')");
              u.by_stimulus[s * u.n_units + unit] = v;
            }
            ++unit;
          }
        }
        const auto rep = tally(pair_verdicts(u, crit), lab_verdicts[l]);
        pass15[job] = rep.equivalent_15;
        pass24[job] = rep.equivalent_24;
      },
      cfg.threads);

  LikelihoodGrids out;
  for (auto* g : {&out.fifteen, &out.twenty_four}) {
    g->subjects = cfg.subjects;
    g->repetitions = cfg.repetitions;
    g->percent.assign(rows * cols, std::nullopt);
    g->trials.assign(rows * cols, 0);
  }
  out.fifteen.target = EquivalenceTarget::fifteen_subjects;
  out.twenty_four.target = EquivalenceTarget::twenty_four_subjects;
  for (std::size_t c = 0; c < rows * cols; ++c) {
    const int n = cfg.subjects[c % cols], R = cfg.repetitions[c / cols];
    if (n * R < 2) continue;  // a single vote per stimulus admits no paired test
    std::size_t a = 0, b = 0;
    for (std::size_t k = 0; k < per_cell; ++k) {
      a += pass15[c * per_cell + k];
      b += pass24[c * per_cell + k];
    }
    out.fifteen.percent[c] = 100.0 * static_cast<double>(a) / static_cast<double>(per_cell);
    out.twenty_four.percent[c] = 100.0 * static_cast<double>(b) / static_cast<double>(per_cell);
    out.fifteen.trials[c] = out.twenty_four.trials[c] = per_cell;
  }
  return out;
}

inline LikelihoodGrid likelihood_grid(const RatingDataset& test, const std::vector<const RatingDataset*>& labs,
                                      const GridConfig& cfg, EquivalenceTarget target) {
  auto both = likelihood_grids(test, labs, cfg);
  return target == EquivalenceTarget::fifteen_subjects ? std::move(both.fifteen) : std::move(both.twenty_four);
}

}  // namespace fowr
