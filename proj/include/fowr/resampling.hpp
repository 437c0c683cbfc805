#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "metrics.hpp"
#include "mos_vector.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace fowr {

/// MOS of the first R repetitions of a subject subset.
inline MosVector subset_mos(const RatingDataset& ds, const std::vector<std::string>& subjects, int repetitions) {
  if (subjects.empty()) throw invalid_parameter("subset needs at least one subject");
  if (repetitions < 1) throw invalid_parameter("subset needs at least one repetition");
  std::vector<std::size_t> idx;
  for (const auto& id : subjects) {
    const std::size_t i = ds.require_subject(id);
    if (ds.repetitions(i) < repetitions)
      throw invalid_dataset("subject '" + id + "' has fewer than " + std::to_string(repetitions) + " repetitions");
    idx.push_back(i);
  }
  MosVector out;
  std::vector<double> votes;
  for (std::size_t j = 0; j < ds.stimulus_count(); ++j) {
    votes.clear();
    for (std::size_t i : idx)
      for (int r = 1; r <= repetitions; ++r)
        if (int v = ds.vote(i, r, j)) votes.push_back(v);
    out.push_back(summarize_votes(ds.catalog()[j].pvs_id, votes));
  }
  return out;
}

/// Baseline MOS from first-repetition votes, leaving out `excluded`
/// subjects. Identifiers absent from the dataset are ignored.
inline MosVector modified_baseline(const RatingDataset& one_rep, const std::vector<std::string>& excluded) {
  std::set<std::string> out_set(excluded.begin(), excluded.end());
  std::vector<std::string> keep;
  for (const auto& s : one_rep.subjects())
    if (!out_set.count(s)) keep.push_back(s);
  if (keep.empty()) throw invalid_parameter("modified baseline excludes every subject");
  return subset_mos(one_rep, keep, 1);
}

enum class ComparisonTarget { modified_baseline, ground_truth };

struct SubsetStudyConfig {
  std::size_t n_subjects = 4;
  int n_repetitions = 4;
  std::size_t n_trials = 1000;
  ComparisonTarget target = ComparisonTarget::modified_baseline;
  std::uint64_t seed = 1;
  std::string content_group;  // compare only this group (empty = every shared stimulus)
  double sigma_delta = 0.34;  // population bias spread used for the predicted sigma_{N,R}
  unsigned threads = 0;
};

/// What a subset is compared against: first-repetition ratings of a
/// conventional panel (leave-subset-out baseline) or a ground-truth MOS.
struct StudyReference {
  const RatingDataset* baseline_ratings = nullptr;
  const MosVector* ground_truth = nullptr;
};

struct DistributionSummary {
  std::vector<double> sorted;  // trial values, ascending
  double median = 0.0;
  double p05 = 0.0;
  double p95 = 0.0;
  std::size_t excluded = 0;  // trials where the metric was undefined
};

struct MetricDistribution {
  DistributionSummary pcc, rmse, mos05;
};

struct BiasDistributionStats {
  double mean = 0.0;       // observed mean of the combined bias
  double stddev = 0.0;     // observed standard deviation
  double predicted = 0.0;  // sigma_delta / sqrt(N)
};

struct SubsetStudyResult {
  SubsetStudyConfig config;
  std::size_t n_stimuli = 0;
  MetricDistribution metrics;
  BiasDistributionStats bias;
  std::vector<double> combined_bias;  // per trial, in trial order
};

inline DistributionSummary summarize_distribution(std::vector<double> values, std::size_t excluded = 0) {
  DistributionSummary d;
  d.excluded = excluded;
  std::sort(values.begin(), values.end());
  d.sorted = std::move(values);
  if (!d.sorted.empty()) {
    d.median = stats::nearest_rank(d.sorted, 0.5);
    d.p05 = stats::nearest_rank(d.sorted, 0.05);
    d.p95 = stats::nearest_rank(d.sorted, 0.95);
  }
  return d;
}

/// Monte Carlo study of N-subject, R-repetition subsets. Every trial draws N
/// subjects without replacement from its own sub-stream, so the result is
/// identical for any thread count.
inline SubsetStudyResult subset_study(const SubsetStudyConfig& cfg, const RatingDataset& test,
                                      const StudyReference& ref) {
  if (cfg.n_trials < 1) throw invalid_parameter("subset study needs at least one trial");
  if (cfg.n_repetitions < 1) throw invalid_parameter("subset study needs R >= 1");
  if (cfg.n_subjects < 1) throw invalid_parameter("subset study needs N >= 1");

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < test.subject_count(); ++i)
    if (test.repetitions(i) >= cfg.n_repetitions) eligible.push_back(i);
  if (cfg.n_subjects > eligible.size())
    throw invalid_parameter("N = " + std::to_string(cfg.n_subjects) + " exceeds the " + std::to_string(eligible.size()) +
                            " subjects with at least " + std::to_string(cfg.n_repetitions) + " repetitions");

  // Stimuli compared, as indices into the test catalog.
  std::vector<std::size_t> stim;
  std::vector<double> fixed_ref;                       // ground-truth mode
  std::vector<double> base_sum, base_count;            // baseline mode: totals over all subjects
  std::vector<std::vector<int>> base_votes;            // baseline mode: per test subject, first-rep votes
  if (cfg.target == ComparisonTarget::ground_truth) {
    if (!ref.ground_truth) throw invalid_parameter("ground-truth mode needs a ground-truth MOS vector");
    for (std::size_t j = 0; j < test.stimulus_count(); ++j) {
      const auto& s = test.catalog()[j];
      if (!cfg.content_group.empty() && s.content_group != cfg.content_group) continue;
      if (const auto* e = ref.ground_truth->find(s.pvs_id)) {
        stim.push_back(j);
        fixed_ref.push_back(e->mos);
      }
    }
  } else {
    if (!ref.baseline_ratings) throw invalid_parameter("modified-baseline mode needs first-repetition ratings");
    const auto& one = *ref.baseline_ratings;
    for (std::size_t j = 0; j < test.stimulus_count(); ++j) {
      if (!cfg.content_group.empty() && test.catalog()[j].content_group != cfg.content_group) continue;
      auto bj = one.stimulus_index(test.catalog()[j].pvs_id);
      if (!bj) continue;
      double sum = 0.0, count = 0.0;
      for (std::size_t b = 0; b < one.subject_count(); ++b)
        if (int v = one.vote(b, 1, *bj)) {
          sum += v;
          count += 1.0;
        }
      stim.push_back(j);
      base_sum.push_back(sum);
      base_count.push_back(count);
    }
    base_votes.resize(test.subject_count());
    for (std::size_t i = 0; i < test.subject_count(); ++i) {
      auto b = one.subject_index(test.subjects()[i]);
      base_votes[i].assign(stim.size(), 0);
      if (!b) continue;
      for (std::size_t k = 0; k < stim.size(); ++k)
        base_votes[i][k] = one.vote(*b, 1, *one.stimulus_index(test.catalog()[stim[k]].pvs_id));
    }
  }
  if (stim.empty()) throw missing_data("test data and reference share no stimuli");

  const std::size_t J = stim.size();
  std::vector<double> pcc(cfg.n_trials, NAN), err(cfg.n_trials), sim(cfg.n_trials), bias(cfg.n_trials);
  parallel_for(
      cfg.n_trials,
      [&](std::size_t t) {
        rng_t rng = substream(cfg.seed, t);
        const auto pick = draw_without_replacement(rng, eligible.size(), cfg.n_subjects);
        std::vector<double> mu(J, 0.0), refv(J);
        std::size_t missing = 0;
        for (std::size_t p : pick) {
          const std::size_t i = eligible[p];
          for (int r = 1; r <= cfg.n_repetitions; ++r)
            for (std::size_t k = 0; k < J; ++k) {
              const int v = test.vote(i, r, stim[k]);
              missing += v == 0;
              mu[k] += v;
            }
        }
        if (missing) throw invalid_dataset("subset study needs complete votes for every drawn subject");
        const double denom = static_cast<double>(cfg.n_subjects) * cfg.n_repetitions;
        for (auto& m : mu) m /= denom;
        if (cfg.target == ComparisonTarget::ground_truth) {
          refv = fixed_ref;
        } else {
          for (std::size_t k = 0; k < J; ++k) {
            double s = base_sum[k], c = base_count[k];
            for (std::size_t p : pick)
              if (int v = base_votes[eligible[p]][k]) {
                s -= v;
                c -= 1.0;
              }
            if (c <= 0.0) throw invalid_parameter("modified baseline excludes every subject");
            refv[k] = s / c;
          }
        }
        const auto rep = compare(mu, refv);
        pcc[t] = rep.pcc.value_or(NAN);
        err[t] = rep.rmse;
        sim[t] = rep.mos05;
        double d = 0.0;
        for (std::size_t k = 0; k < J; ++k) d += mu[k] - refv[k];
        bias[t] = d / static_cast<double>(J);
      },
      cfg.threads);

  SubsetStudyResult out;
  out.config = cfg;
  out.n_stimuli = J;
  std::vector<double> defined;
  for (double v : pcc)
    if (!std::isnan(v)) defined.push_back(v);
  const std::size_t excluded = pcc.size() - defined.size();
  out.metrics.pcc = summarize_distribution(std::move(defined), excluded);
  out.metrics.rmse = summarize_distribution(err);
  out.metrics.mos05 = summarize_distribution(sim);
  out.bias.mean = stats::mean(bias);
  out.bias.stddev = stats::stddev(bias);
  out.bias.predicted = cfg.sigma_delta / std::sqrt(static_cast<double>(cfg.n_subjects));
  out.combined_bias = std::move(bias);
  return out;
}

/// Root-mean-square error of a session bias estimated from n random stimuli
/// against the subject's bias over all of its data.
inline double bias_estimation_error(const RatingDataset& ds, const MosVector& baseline, std::size_t n_samples,
                                    std::size_t n_trials, std::uint64_t seed, unsigned threads = 0) {
  if (n_samples < 1) throw invalid_parameter("need at least one sample");
  if (n_trials < 1) throw invalid_parameter("need at least one trial");
  if (ds.subject_count() == 0) throw missing_data("no subjects");
  const auto xi = detail::align_baseline(ds, baseline);
  const auto est = subject_bias(ds, baseline);
  for (std::size_t i = 0; i < ds.subject_count(); ++i)
    for (const auto& s : est.subjects[i].sessions)
      if (n_samples > s.n)
        throw invalid_parameter("n_samples = " + std::to_string(n_samples) + " exceeds the " + std::to_string(s.n) +
                                " stimuli of a session");

  std::vector<double> sq(n_trials);
  parallel_for(
      n_trials,
      [&](std::size_t t) {
        rng_t rng = substream(seed, t);
        const std::size_t i = uniform_index(rng, ds.subject_count());
        const auto& sessions = est.subjects[i].sessions;
        const int r = sessions[uniform_index(rng, sessions.size())].repetition;
        std::vector<std::size_t> voted;
        for (std::size_t j = 0; j < xi.size(); ++j)
          if (ds.vote(i, r, j)) voted.push_back(j);
        const auto pick = draw_without_replacement(rng, voted.size(), n_samples);
        double s = 0.0;
        for (std::size_t p : pick) s += ds.vote(i, r, voted[p]) - xi[voted[p]];
        const double e = s / static_cast<double>(n_samples) - est.subjects[i].global;
        sq[t] = e * e;
      },
      threads);
  return std::sqrt(stats::mean(sq));
}

struct AnchorCorrectionReport {
  ComparisonReport uncorrected;
  ComparisonReport pooled;       // one bias for the whole panel
  ComparisonReport per_subject;  // each subject's own anchor bias removed
  double pooled_bias = 0.0;
  std::map<std::string, double> subject_bias;
};

/// Estimates observer bias on an anchor group with known prior MOS, removes
/// it from the test group, and compares with the test-group ground truth
/// before and after.
inline AnchorCorrectionReport anchor_bias_correction(const RatingDataset& ds, const std::string& anchor_group,
                                                     const std::string& test_group, const MosVector& prior_anchor_mos,
                                                     const MosVector& ground_truth) {
  std::vector<std::size_t> anchor, tested;
  for (std::size_t j = 0; j < ds.stimulus_count(); ++j) {
    const auto& s = ds.catalog()[j];
    if (s.content_group == anchor_group && prior_anchor_mos.find(s.pvs_id)) anchor.push_back(j);
    if (s.content_group == test_group && ground_truth.find(s.pvs_id)) tested.push_back(j);
  }
  if (anchor.empty()) throw missing_data("no anchor-group stimuli with a prior MOS (group '" + anchor_group + "')");
  if (tested.empty()) throw missing_data("no test-group stimuli with a ground truth (group '" + test_group + "')");

  AnchorCorrectionReport out;
  std::vector<double> b(ds.subject_count(), 0.0);
  double pooled_sum = 0.0, pooled_n = 0.0;
  for (std::size_t i = 0; i < ds.subject_count(); ++i) {
    double s = 0.0, n = 0.0;
    for (int r = 1; r <= ds.repetitions(i); ++r)
      for (std::size_t j : anchor)
        if (int v = ds.vote(i, r, j)) {
          s += v - prior_anchor_mos.at(ds.catalog()[j].pvs_id).mos;
          n += 1.0;
        }
    if (n == 0.0) throw missing_data("subject '" + ds.subjects()[i] + "' has no anchor votes");
    b[i] = s / n;
    out.subject_bias[ds.subjects()[i]] = b[i];
    pooled_sum += s;
    pooled_n += n;
  }
  out.pooled_bias = pooled_sum / pooled_n;

  std::vector<double> raw, pooled, per_subject, truth;
  for (std::size_t j : tested) {
    double s = 0.0, sc = 0.0, n = 0.0;
    for (std::size_t i = 0; i < ds.subject_count(); ++i)
      for (int r = 1; r <= ds.repetitions(i); ++r)
        if (int v = ds.vote(i, r, j)) {
          s += v;
          sc += v - b[i];
          n += 1.0;
        }
    if (n == 0.0) throw missing_data("test stimulus '" + ds.catalog()[j].pvs_id + "' has no votes");
    raw.push_back(s / n);
    pooled.push_back(s / n - out.pooled_bias);
    per_subject.push_back(sc / n);
    truth.push_back(ground_truth.at(ds.catalog()[j].pvs_id).mos);
  }
  out.uncorrected = compare(raw, truth);
  out.pooled = compare(pooled, truth);
  out.per_subject = compare(per_subject, truth);
  return out;
}

struct SrcBiasError {
  std::string src_id;
  std::size_t n_stimuli = 0;
  std::vector<double> errors;  // one per (subject, session)
  double mean = 0.0;
  double stddev = 0.0;
  double rms = 0.0;
};

/// For each source-content subset: session bias estimated from that subset
/// minus the same session's bias over every stimulus.
inline std::vector<SrcBiasError> per_src_bias_error(const RatingDataset& ds, const MosVector& baseline) {
  const auto xi = detail::align_baseline(ds, baseline);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < ds.stimulus_count(); ++j) {
    const auto& src = ds.catalog()[j].src_id;
    if (src.empty()) throw missing_data("stimulus '" + ds.catalog()[j].pvs_id + "' has no src_id label");
    groups[src].push_back(j);
  }
  std::vector<SrcBiasError> out;
  for (const auto& [src, members] : groups) {
    SrcBiasError e;
    e.src_id = src;
    e.n_stimuli = members.size();
    for (std::size_t i = 0; i < ds.subject_count(); ++i)
      for (int r = 1; r <= ds.repetitions(i); ++r) {
        double all = 0.0, part = 0.0, na = 0.0, np = 0.0;
        for (std::size_t j = 0; j < xi.size(); ++j)
          if (int v = ds.vote(i, r, j)) {
            all += v - xi[j];
            na += 1.0;
          }
        for (std::size_t j : members)
          if (int v = ds.vote(i, r, j)) {
            part += v - xi[j];
            np += 1.0;
          }
        if (np > 0.0) e.errors.push_back(part / np - all / na);
      }
    if (e.errors.empty()) throw missing_data("SRC '" + src + "' has no votes");
    e.mean = stats::mean(e.errors);
    e.stddev = stats::stddev(e.errors);
    double sq = 0.0;
    for (double v : e.errors) sq += v * v;
    e.rms = std::sqrt(sq / static_cast<double>(e.errors.size()));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace fowr
