#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "mos_vector.hpp"
#include "stats.hpp"

namespace fowr {

/// MOS entry of a single vote sample: mean and Student-t 95% half-width.
inline MosEntry summarize_votes(std::string pvs_id, std::span<const double> votes) {
  if (votes.empty()) throw missing_data("stimulus '" + pvs_id + "' has no votes");
  const auto ci = stats::t_interval(votes, 0.95);
  return MosEntry{std::move(pvs_id), ci.mean, ci.half_width, votes.size()};
}

/// MOS of every catalog stimulus over all subjects and repetitions.
inline MosVector mos(const RatingDataset& ds) {
  MosVector out;
  std::vector<double> votes;
  for (std::size_t j = 0; j < ds.stimulus_count(); ++j) {
    votes.clear();
    for (std::size_t i = 0; i < ds.subject_count(); ++i)
      for (int r = 1; r <= ds.repetitions(i); ++r)
        if (int v = ds.vote(i, r, j)) votes.push_back(v);
    out.push_back(summarize_votes(ds.catalog()[j].pvs_id, votes));
  }
  return out;
}

namespace detail {

/// Baseline values aligned to the dataset catalog.
inline std::vector<double> align_baseline(const RatingDataset& ds, const MosVector& baseline) {
  std::vector<double> out;
  out.reserve(ds.stimulus_count());
  for (const auto& s : ds.catalog()) {
    const auto* e = baseline.find(s.pvs_id);
    if (!e) throw missing_data("baseline has no MOS for stimulus '" + s.pvs_id + "'");
    out.push_back(e->mos);
  }
  return out;
}

/// Repetition count of subject i, verified to be complete: every stimulus
/// voted in every repetition 1..R_i.
inline int complete_repetitions(const RatingDataset& ds, std::size_t i) {
  const int R = ds.repetitions(i);
  for (int r = 1; r <= R; ++r)
    for (std::size_t j = 0; j < ds.stimulus_count(); ++j)
      if (!ds.vote(i, r, j))
        throw invalid_dataset("subject '" + ds.subjects()[i] + "' is missing a vote for '" +
                              ds.catalog()[j].pvs_id + "' in repetition " + std::to_string(r));
  return R;
}

/// Per-stimulus mean of repetitions [first, last] (1-based) of subject i.
inline std::vector<double> mean_over_repetitions(const RatingDataset& ds, std::size_t i, int first, int last) {
  std::vector<double> out(ds.stimulus_count(), 0.0);
  for (int r = first; r <= last; ++r)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += ds.vote(i, r, j);
  const double n = static_cast<double>(last - first + 1);
  for (auto& v : out) v /= n;
  return out;
}

}  // namespace detail

/// Estimated true opinion of one subject: per-stimulus mean over that
/// subject's repetitions, in catalog order.
inline std::vector<double> true_opinion_estimate(const RatingDataset& ds, const std::string& subject_id) {
  const std::size_t i = ds.require_subject(subject_id);
  std::vector<double> sum(ds.stimulus_count(), 0.0);
  std::vector<int> count(ds.stimulus_count(), 0);
  for (int r = 1; r <= ds.repetitions(i); ++r)
    for (std::size_t j = 0; j < sum.size(); ++j)
      if (int v = ds.vote(i, r, j)) {
        sum[j] += v;
        ++count[j];
      }
  for (std::size_t j = 0; j < sum.size(); ++j) {
    if (count[j] == 0 || count[j] != count[0])
      throw invalid_dataset("subject '" + subject_id + "' has ragged repetitions (stimulus '" +
                            ds.catalog()[j].pvs_id + "')");
    sum[j] /= count[j];
  }
  return sum;
}

struct SessionBias {
  int repetition = 0;
  double bias = 0.0;     // mean deviation from the baseline over the session's stimuli
  std::size_t n = 0;     // stimuli voted in the session
};

struct SubjectBias {
  std::string subject_id;
  std::vector<SessionBias> sessions;
  std::vector<double> per_stimulus;  // c_{i,j}; NaN for stimuli the subject never voted
  double global = 0.0;               // mean of the session biases
};

struct BiasEstimate {
  std::vector<SubjectBias> subjects;

  const SubjectBias& at(const std::string& id) const {
    for (const auto& s : subjects)
      if (s.subject_id == id) return s;
    throw missing_data("no bias estimate for subject '" + id + "'");
  }
};

/// Deviation of every vote from the baseline, summarized per session and per
/// stimulus. Session biases are normalized by the stimuli actually voted.
inline BiasEstimate subject_bias(const RatingDataset& ds, const MosVector& baseline) {
  const auto xi = detail::align_baseline(ds, baseline);
  BiasEstimate out;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    SubjectBias sb;
    sb.subject_id = ds.subjects()[i];
    std::vector<double> csum(ds.stimulus_count(), 0.0);
    std::vector<int> ccount(ds.stimulus_count(), 0);
    for (int r = 1; r <= ds.repetitions(i); ++r) {
      double s = 0.0;
      std::size_t n = 0;
      for (std::size_t j = 0; j < xi.size(); ++j) {
        if (int v = ds.vote(i, r, j)) {
          const double d = v - xi[j];
          s += d;
          ++n;
          csum[j] += d;
          ++ccount[j];
        }
      }
      if (n) sb.sessions.push_back({r, s / static_cast<double>(n), n});
    }
    sb.per_stimulus.resize(xi.size());
    for (std::size_t j = 0; j < xi.size(); ++j)
      sb.per_stimulus[j] = ccount[j] ? csum[j] / ccount[j] : std::nan("");
    double g = 0.0;
    for (const auto& s : sb.sessions) g += s.bias;
    sb.global = sb.sessions.empty() ? 0.0 : g / static_cast<double>(sb.sessions.size());
    out.subjects.push_back(std::move(sb));
  }
  return out;
}

struct SessionTest {
  int repetition = 0;
  double mean_difference = 0.0;
  double t = 0.0;
  double p = 1.0;
  bool significant = false;
  bool degenerate = false;
};

struct SubjectStability {
  std::string subject_id;
  std::vector<SessionTest> sessions;
  std::size_t significant_sessions = 0;
};

struct BiasStability {
  double alpha = 0.05;
  std::size_t n_tests = 0;
  double corrected_alpha = 0.05;
  std::vector<SubjectStability> subjects;

  std::size_t subjects_without_significant_sessions() const {
    std::size_t n = 0;
    for (const auto& s : subjects) n += s.significant_sessions == 0;
    return n;
  }
};

/// Per-session paired t-test of the session deviations against the subject's
/// pooled deviations, Bonferroni-corrected over every (subject, session) test.
inline BiasStability bias_stability(const RatingDataset& ds, const MosVector& baseline, double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_parameter("alpha must lie in (0, 1)");
  const auto xi = detail::align_baseline(ds, baseline);
  const auto bias = subject_bias(ds, baseline);
  BiasStability out;
  out.alpha = alpha;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    if (ds.repetitions(i) < 2)
      throw invalid_dataset("bias stability needs >= 2 repetitions (subject '" + ds.subjects()[i] + "')");
    const auto& c = bias.subjects[i].per_stimulus;
    SubjectStability ss;
    ss.subject_id = ds.subjects()[i];
    std::vector<double> diff;
    for (int r = 1; r <= ds.repetitions(i); ++r) {
      diff.clear();
      for (std::size_t j = 0; j < xi.size(); ++j)
        if (int v = ds.vote(i, r, j)) diff.push_back((v - xi[j]) - c[j]);
      if (diff.size() < 2) continue;
      const auto t = stats::t_test_zero_mean(diff);
      ss.sessions.push_back({r, t.mean, t.t, t.p, false, t.degenerate});
    }
    out.n_tests += ss.sessions.size();
    out.subjects.push_back(std::move(ss));
  }
  out.corrected_alpha = out.n_tests ? alpha / static_cast<double>(out.n_tests) : alpha;
  for (auto& s : out.subjects) {
    for (auto& t : s.sessions) {
      t.significant = t.degenerate ? t.mean_difference != 0.0 : t.p < out.corrected_alpha;
      s.significant_sessions += t.significant;
    }
  }
  return out;
}

enum class Direction { inward, outward };
enum class Treatment { current, accrued, reverse };
enum class Metric { pcc, rmse, mos05 };

inline const char* to_string(Direction d) { return d == Direction::inward ? "inward" : "outward"; }
inline const char* to_string(Treatment t) {
  return t == Treatment::current ? "current" : t == Treatment::accrued ? "accrued" : "reverse";
}
inline const char* to_string(Metric m) { return m == Metric::pcc ? "pcc" : m == Metric::rmse ? "rmse" : "mos05"; }

struct SeriesPoint {
  int repetition = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;  // subjects whose PCC was undefined
};

struct Series {
  Direction direction;
  Treatment treatment;
  Metric metric;
  std::vector<SeriesPoint> points;
};

struct ConvergenceCurves {
  int max_repetitions = 0;
  std::vector<Series> series;  // 2 directions x 3 treatments x 3 metrics

  const Series& get(Direction d, Treatment t, Metric m) const {
    for (const auto& s : series)
      if (s.direction == d && s.treatment == t && s.metric == m) return s;
    throw missing_data("no such convergence series");
  }
};

/// Individual-subject convergence: per repetition index, compare a subject's
/// current / accrued (first R) / reverse (last R) scores with the baseline
/// (outward) or with the subject's own all-repetition mean (inward), and
/// average over subjects with a 95% t band.
inline ConvergenceCurves convergence_curves(const RatingDataset& ds, const MosVector& baseline) {
  if (ds.subject_count() == 0) throw missing_data("convergence curves need at least one subject");
  const auto xi = detail::align_baseline(ds, baseline);
  const int R = detail::complete_repetitions(ds, 0);
  for (std::size_t i = 1; i < ds.subject_count(); ++i)
    if (detail::complete_repetitions(ds, i) != R)
      throw invalid_dataset("convergence curves need every subject to complete the same repetitions");

  constexpr std::array directions{Direction::inward, Direction::outward};
  constexpr std::array treatments{Treatment::current, Treatment::accrued, Treatment::reverse};
  constexpr std::array metrics{Metric::pcc, Metric::rmse, Metric::mos05};

  // keyed by (direction, treatment, metric, repetition); per-subject values
  std::vector<double> empty;
  std::map<std::tuple<int, int, int, int>, std::vector<double>> values;
  std::map<std::tuple<int, int, int, int>, std::size_t> excluded;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    const auto inward_ref = detail::mean_over_repetitions(ds, i, 1, R);
    for (int r = 1; r <= R; ++r) {
      const std::array<std::vector<double>, 3> scores{detail::mean_over_repetitions(ds, i, r, r),
                                                      detail::mean_over_repetitions(ds, i, 1, r),
                                                      detail::mean_over_repetitions(ds, i, R - r + 1, R)};
      for (int d = 0; d < 2; ++d) {
        const auto& ref = directions[d] == Direction::inward ? inward_ref : xi;
        for (int t = 0; t < 3; ++t) {
          const auto rep = compare(scores[t], ref);
          if (rep.pcc)
            values[{d, t, 0, r}].push_back(*rep.pcc);
          else
            ++excluded[{d, t, 0, r}];
          values[{d, t, 1, r}].push_back(rep.rmse);
          values[{d, t, 2, r}].push_back(rep.mos05);
        }
      }
    }
  }

  ConvergenceCurves out;
  out.max_repetitions = R;
  for (int d = 0; d < 2; ++d)
    for (int t = 0; t < 3; ++t)
      for (int m = 0; m < 3; ++m) {
        Series s{directions[d], treatments[t], metrics[m], {}};
        for (int r = 1; r <= R; ++r) {
          SeriesPoint p;
          p.repetition = r;
          auto it = values.find({d, t, m, r});
          const auto& v = it == values.end() ? empty : it->second;
          auto ex = excluded.find({d, t, m, r});
          p.n_excluded = ex == excluded.end() ? 0 : ex->second;
          p.n_used = v.size();
          if (v.empty()) {
            p.mean = p.ci_low = p.ci_high = std::nan("");
          } else {
            const auto ci = stats::t_interval(v);
            p.mean = ci.mean;
            p.ci_low = ci.low();
            p.ci_high = ci.high();
          }
          s.points.push_back(p);
        }
        out.series.push_back(std::move(s));
      }
  return out;
}

/// Fraction of stimuli whose vote in repetition r differs from repetition r-1.
inline double vote_change_fraction(const RatingDataset& ds, const std::string& subject_id, int repetition) {
  if (repetition < 2) throw invalid_parameter("vote change needs repetition >= 2");
  const std::size_t i = ds.require_subject(subject_id);
  std::size_t both = 0, changed = 0;
  for (std::size_t j = 0; j < ds.stimulus_count(); ++j) {
    const int a = ds.vote(i, repetition - 1, j), b = ds.vote(i, repetition, j);
    if (a && b) {
      ++both;
      changed += a != b;
    }
  }
  if (!both)
    throw missing_data("subject '" + subject_id + "' lacks repetitions " + std::to_string(repetition - 1) + " and " +
                       std::to_string(repetition));
  return static_cast<double>(changed) / static_cast<double>(both);
}

struct QuestionnaireResponse {
  int confidence = 3;
  int focus = 3;
  int tiredness = 3;

  bool valid() const noexcept {
    return confidence >= 1 && confidence <= 5 && focus >= 1 && focus <= 5 && tiredness >= 1 && tiredness <= 5;
  }
  bool operator==(const QuestionnaireResponse&) const = default;
};

struct QuestionnaireRecord {
  std::string subject_id;
  int repetition = 1;
  QuestionnaireResponse response;
};

struct RepetitionSummary {
  int repetition = 0;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
};

struct ItemTrend {
  std::vector<RepetitionSummary> per_repetition;
  std::optional<double> slope;  // least squares of mean on repetition; absent for one repetition
};

/// Trend of one Likert item; responses[k] holds the answers given in
/// repetition k + 1. Repetitions without answers are skipped.
inline ItemTrend questionnaire_trend(const std::vector<std::vector<double>>& responses) {
  ItemTrend out;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < responses.size(); ++k) {
    const auto& v = responses[k];
    if (v.empty()) continue;
    for (double a : v)
      if (!(a >= 1.0 && a <= 5.0)) throw invalid_parameter("Likert response outside 1..5");
    const auto ci = stats::t_interval(v);
    out.per_repetition.push_back({static_cast<int>(k + 1), ci.mean, ci.low(), ci.high(), v.size()});
    x.push_back(static_cast<double>(k + 1));
    y.push_back(ci.mean);
  }
  out.slope = stats::ols_slope(x, y);
  return out;
}

struct QuestionnaireTrends {
  ItemTrend confidence, focus, tiredness;
};

inline QuestionnaireTrends questionnaire_trend(const std::vector<QuestionnaireRecord>& records) {
  std::array<std::vector<std::vector<double>>, 3> items;
  for (const auto& rec : records) {
    if (rec.repetition < 1) throw invalid_parameter("questionnaire repetition must be >= 1");
    const auto k = static_cast<std::size_t>(rec.repetition);
    for (auto& it : items)
      if (it.size() < k) it.resize(k);
    items[0][k - 1].push_back(rec.response.confidence);
    items[1][k - 1].push_back(rec.response.focus);
    items[2][k - 1].push_back(rec.response.tiredness);
  }
  return {questionnaire_trend(items[0]), questionnaire_trend(items[1]), questionnaire_trend(items[2])};
}

struct RepetitionTreatments {
  ComparisonReport first_vs_average;
  ComparisonReport last_vs_average;
  ComparisonReport first_vs_last;
};

/// Pooled MOS built from each subject's first vote, last vote and
/// all-repetition mean, compared pairwise. Subjects must share one
/// complete repetition count.
inline RepetitionTreatments repetition_treatments(const RatingDataset& ds) {
  if (ds.subject_count() == 0) throw missing_data("no subjects");
  const int R = detail::complete_repetitions(ds, 0);
  std::vector<double> first(ds.stimulus_count(), 0.0), last(first), avg(first);
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    if (detail::complete_repetitions(ds, i) != R)
      throw invalid_dataset("subjects do not share one repetition count");
    const auto a = detail::mean_over_repetitions(ds, i, 1, R);
    for (std::size_t j = 0; j < first.size(); ++j) {
      first[j] += ds.vote(i, 1, j);
      last[j] += ds.vote(i, R, j);
      avg[j] += a[j];
    }
  }
  const double n = static_cast<double>(ds.subject_count());
  for (std::size_t j = 0; j < first.size(); ++j) {
    first[j] /= n;
    last[j] /= n;
    avg[j] /= n;
  }
  return {compare(first, avg), compare(last, avg), compare(first, last)};
}

}  // namespace fowr
