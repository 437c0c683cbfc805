#pragma once

#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "confusion.hpp"
#include "designer.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "metrics.hpp"
#include "resampling.hpp"
#include "screening.hpp"

// JSON views of the result types, used for machine-readable reports.
namespace fowr::report {

using json = nlohmann::json;

inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

inline json to_json(const ComparisonReport& r) {
  return {{"pcc", number(r.pcc)}, {"rmse", r.rmse}, {"mos05", r.mos05}, {"n_stimuli", r.n_stimuli}};
}

inline json to_json(const MosVector& v) {
  json a = json::array();
  for (const auto& e : v) a.push_back({{"pvs_id", e.pvs_id}, {"mos", e.mos}, {"ci95", e.ci95}, {"count", e.count}});
  return a;
}

inline json to_json(const DistributionSummary& d) {
  return {{"median", d.median}, {"p05", d.p05}, {"p95", d.p95}, {"n", d.sorted.size()}, {"excluded", d.excluded}};
}

inline json to_json(const SubsetStudyResult& r) {
  return {{"n_subjects", r.config.n_subjects},
          {"n_repetitions", r.config.n_repetitions},
          {"n_trials", r.config.n_trials},
          {"target", r.config.target == ComparisonTarget::ground_truth ? "ground-truth" : "modified-baseline"},
          {"n_stimuli", r.n_stimuli},
          {"pcc", to_json(r.metrics.pcc)},
          {"rmse", to_json(r.metrics.rmse)},
          {"mos05", to_json(r.metrics.mos05)},
          {"combined_bias", {{"mean", r.bias.mean}, {"stddev", r.bias.stddev}, {"predicted", r.bias.predicted}}}};
}

inline json to_json(const BiasEstimate& b) {
  json a = json::array();
  for (const auto& s : b.subjects) {
    json sessions = json::array();
    for (const auto& x : s.sessions) sessions.push_back({{"repetition", x.repetition}, {"bias", x.bias}, {"n", x.n}});
    a.push_back({{"subject_id", s.subject_id}, {"global", s.global}, {"sessions", sessions}});
  }
  return a;
}

inline json to_json(const BiasStability& b) {
  json a = json::array();
  for (const auto& s : b.subjects) {
    json sessions = json::array();
    for (const auto& t : s.sessions)
      sessions.push_back({{"repetition", t.repetition},
                          {"mean_difference", t.mean_difference},
                          {"t", number(t.t)},
                          {"p", t.p},
                          {"significant", t.significant},
                          {"degenerate", t.degenerate}});
    a.push_back({{"subject_id", s.subject_id}, {"significant_sessions", s.significant_sessions}, {"sessions", sessions}});
  }
  return {{"alpha", b.alpha},
          {"n_tests", b.n_tests},
          {"corrected_alpha", b.corrected_alpha},
          {"subjects_without_significant_sessions", b.subjects_without_significant_sessions()},
          {"subjects", a}};
}

/// Tidy rows: direction, treatment, metric, repetition, mean, ci_low, ci_high.
inline json series_table(const ConvergenceCurves& c) {
  json rows = json::array();
  for (const auto& s : c.series)
    for (const auto& p : s.points)
      rows.push_back({{"direction", to_string(s.direction)},
                      {"treatment", to_string(s.treatment)},
                      {"metric", to_string(s.metric)},
                      {"repetition", p.repetition},
                      {"mean", number(p.mean)},
                      {"ci_low", number(p.ci_low)},
                      {"ci_high", number(p.ci_high)},
                      {"n_used", p.n_used},
                      {"n_excluded", p.n_excluded}});
  return rows;
}

inline json to_json(const ConfusionReport& r) {
  return {{"agree", r.agree},
          {"disagree", r.disagree},
          {"tie_involved", r.tie_involved},
          {"n_pairs", r.n_pairs},
          {"equivalent_15", r.equivalent_15},
          {"equivalent_24", r.equivalent_24}};
}

inline json to_json(const LikelihoodGrid& g) { return io::to_json(g); }

inline json to_json(const DesignRecommendation& d) {
  json a = json::array();
  for (const auto& x : d.designs)
    a.push_back({{"subjects", x.subjects},
                 {"repetitions", x.repetitions},
                 {"likelihood", x.likelihood},
                 {"likelihood_with_margin", number(x.likelihood_with_margin)}});
  return {{"target", to_string(d.target)}, {"margin", d.margin}, {"designs", a}, {"note", d.note}};
}

inline json to_json(const ScreeningReport& s) {
  json a = json::array();
  for (const auto& x : s.subjects)
    a.push_back({{"subject_id", x.subject_id}, {"P", x.above}, {"Q", x.below}, {"votes", x.votes}, {"rejected", x.rejected}});
  return {{"rejected", s.rejected}, {"subjects", a}};
}

inline json to_json(const SessionReliability& s) {
  return {{"subject_id", s.subject_id},
          {"repetition", s.repetition},
          {"reliability_index", s.reliability_index ? json(*s.reliability_index) : json(nullptr)}};
}

inline json to_json(const ReliabilityFilterResult& r) {
  json flagged = json::array();
  for (const auto& s : r.flagged) flagged.push_back(to_json(s));
  const double total = static_cast<double>(r.flagged.size() + r.passed.size());
  return {{"flagged", flagged},
          {"n_flagged", r.flagged.size()},
          {"n_sessions", r.flagged.size() + r.passed.size()},
          {"flagged_fraction", total > 0 ? static_cast<double>(r.flagged.size()) / total : 0.0}};
}

inline json to_json(const AnchorCorrectionReport& r) {
  return {{"uncorrected", to_json(r.uncorrected)},
          {"pooled", to_json(r.pooled)},
          {"per_subject", to_json(r.per_subject)},
          {"pooled_bias", r.pooled_bias},
          {"subject_bias", r.subject_bias}};
}

inline json to_json(const std::vector<SrcBiasError>& v) {
  json a = json::array();
  for (const auto& e : v)
    a.push_back({{"src_id", e.src_id}, {"n_stimuli", e.n_stimuli}, {"n", e.errors.size()}, {"mean", e.mean},
                 {"stddev", e.stddev}, {"rms", e.rms}});
  return a;
}

inline json to_json(const ItemTrend& t) {
  json a = json::array();
  for (const auto& p : t.per_repetition)
    a.push_back({{"repetition", p.repetition}, {"mean", p.mean}, {"ci_low", p.ci_low}, {"ci_high", p.ci_high}, {"n", p.n}});
  return {{"per_repetition", a}, {"slope", number(t.slope)}};
}

}  // namespace fowr::report
