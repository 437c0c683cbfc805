#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"

namespace fowr {

/// Constants of the BT.500 observer screening. A stimulus whose vote
/// distribution has kurtosis in [beta2_low, beta2_high] is treated as normal
/// and uses `normal_factor` standard deviations; otherwise `other_factor`.
struct Bt500Params {
  double beta2_low = 2.0;
  double beta2_high = 4.0;
  double normal_factor = 2.0;
  double other_factor = std::sqrt(20.0);
  double reject_fraction = 0.05;  // (P + Q) / votes must exceed this
  double balance = 0.3;           // and |P - Q| / (P + Q) stay below this
};

struct SubjectScreening {
  std::string subject_id;
  std::size_t above = 0;  // P: votes at or above the upper bound
  std::size_t below = 0;  // Q: votes at or below the lower bound
  std::size_t votes = 0;
  bool rejected = false;
};

struct ScreeningReport {
  std::vector<SubjectScreening> subjects;
  std::vector<std::string> rejected;
};

inline ScreeningReport bt500_screen(const RatingDataset& ds, const Bt500Params& params = {}) {
  if (ds.subject_count() < 2) throw invalid_dataset("screening needs at least two subjects");
  ScreeningReport out;
  out.subjects.resize(ds.subject_count());
  for (std::size_t i = 0; i < ds.subject_count(); ++i) out.subjects[i].subject_id = ds.subjects()[i];

  std::vector<std::pair<std::size_t, int>> votes;  // (subject, vote)
  for (std::size_t j = 0; j < ds.stimulus_count(); ++j) {
    votes.clear();
    for (std::size_t i = 0; i < ds.subject_count(); ++i)
      for (int r = 1; r <= ds.repetitions(i); ++r)
        if (int v = ds.vote(i, r, j)) votes.emplace_back(i, v);
    for (const auto& [i, v] : votes) ++out.subjects[i].votes;
    if (votes.size() < 2) continue;

    const double n = static_cast<double>(votes.size());
    double mean = 0.0;
    for (const auto& [i, v] : votes) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (const auto& [i, v] : votes) {
      const double d = v - mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    if (m2 <= 0.0) continue;  // unanimous: no outliers
    const double sd = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m4 /= n;
    const double beta2 = m4 / (m2 * m2);
    const bool normal = beta2 >= params.beta2_low && beta2 <= params.beta2_high;
    const double width = (normal ? params.normal_factor : params.other_factor) * sd;
    for (const auto& [i, v] : votes) {
      if (v >= mean + width) ++out.subjects[i].above;
      if (v <= mean - width) ++out.subjects[i].below;
    }
  }

  for (auto& s : out.subjects) {
    const double pq = static_cast<double>(s.above + s.below);
    if (s.votes == 0 || pq == 0.0) continue;
    const double share = pq / static_cast<double>(s.votes);
    const double skew = std::fabs(static_cast<double>(s.above) - static_cast<double>(s.below)) / pq;
    s.rejected = share > params.reject_fraction && skew < params.balance;
    if (s.rejected) out.rejected.push_back(s.subject_id);
  }
  return out;
}

struct SessionReliability {
  std::string subject_id;
  int repetition = 0;
  std::optional<int> reliability_index;

  bool operator==(const SessionReliability&) const = default;
};

struct ReliabilityFilterResult {
  RatingDataset kept;                         // records of sessions at or above the threshold
  std::vector<SessionReliability> passed;
  std::vector<SessionReliability> flagged;    // below the threshold; their records are not in `kept`
};

/// Partitions sessions by their screen-test reliability index. Sessions
/// without an index pass.
inline ReliabilityFilterResult reliability_filter(const RatingDataset& ds, int threshold = 95) {
  std::map<std::pair<std::string, int>, std::optional<int>> sessions;
  for (const auto& r : ds.records()) {
    auto& idx = sessions[{r.subject_id, r.repetition}];
    if (r.reliability_index) {
      if (*r.reliability_index < 0 || *r.reliability_index > 100)
        throw invalid_dataset("reliability index outside 0..100 for subject '" + r.subject_id + "'");
      if (idx && *idx != *r.reliability_index)
        throw invalid_dataset("conflicting reliability indices in one session of subject '" + r.subject_id + "'");
      idx = r.reliability_index;
    }
  }
  ReliabilityFilterResult out;
  for (const auto& [key, idx] : sessions) {
    SessionReliability s{key.first, key.second, idx};
    (idx && *idx < threshold ? out.flagged : out.passed).push_back(std::move(s));
  }
  out.kept = ds.filter([&](const RatingRecord& r) {
    const auto& idx = sessions.at({r.subject_id, r.repetition});
    return !(idx && *idx < threshold);
  });
  return out;
}

}  // namespace fowr
