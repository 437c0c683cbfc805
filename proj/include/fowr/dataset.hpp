#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "error.hpp"

namespace fowr {

/// One category of the 5-level absolute category rating scale.
class AcrVote {
 public:
  static constexpr int min = 1;
  static constexpr int max = 5;

  constexpr explicit AcrVote(int value) : value_(value) {
    if (!valid(value)) throw invalid_parameter("ACR vote out of range 1..5: " + std::to_string(value));
  }
  static constexpr bool valid(int v) noexcept { return v >= min && v <= max; }
  constexpr int value() const noexcept { return value_; }
  constexpr auto operator<=>(const AcrVote&) const = default;

 private:
  int value_;
};

struct Stimulus {
  std::string pvs_id;
  std::string content_group;
  std::string src_id;
  std::string media;  // locator served to the rating client; may be empty

  bool operator==(const Stimulus&) const = default;
};

struct RatingRecord {
  std::string subject_id;
  std::string pvs_id;
  int repetition = 1;
  AcrVote vote{3};
  std::string lab;            // optional, empty when absent
  std::string content_group;  // optional
  std::string src_id;         // optional
  std::optional<std::string> session_date;
  std::optional<int> reliability_index;

  bool operator==(const RatingRecord&) const = default;

  auto key() const { return std::tie(subject_id, pvs_id, repetition); }
};

/// Immutable, indexed collection of votes. Records are held in canonical
/// (subject, pvs, repetition) order and mirrored in a dense
/// subject x repetition x stimulus cube for the numeric routines.
class RatingDataset {
 public:
  enum class repetition_check { contiguous, relaxed };

  RatingDataset() = default;

  /// An empty `catalog` is derived from the records, sorted by pvs_id.
  explicit RatingDataset(std::vector<RatingRecord> records, std::vector<Stimulus> catalog = {},
                         repetition_check check = repetition_check::contiguous)
      : records_(std::move(records)), catalog_(std::move(catalog)) {
    std::sort(records_.begin(), records_.end(),
              [](const RatingRecord& a, const RatingRecord& b) { return a.key() < b.key(); });
    for (std::size_t k = 1; k < records_.size(); ++k) {
      if (records_[k - 1].key() == records_[k].key()) {
        const auto& r = records_[k];
        throw invalid_dataset("duplicate rating for subject '" + r.subject_id + "', pvs '" + r.pvs_id +
                              "', repetition " + std::to_string(r.repetition));
      }
    }
    if (catalog_.empty()) derive_catalog();
    for (std::size_t j = 0; j < catalog_.size(); ++j) {
      if (!stimulus_lookup_.emplace(catalog_[j].pvs_id, j).second)
        throw invalid_dataset("duplicate pvs_id in catalog: " + catalog_[j].pvs_id);
    }

    std::map<std::string, std::set<int>> reps;
    for (const auto& r : records_) {
      if (r.repetition < 1)
        throw invalid_dataset("repetition must be >= 1 (subject '" + r.subject_id + "')");
      if (!stimulus_lookup_.count(r.pvs_id))
        throw invalid_dataset("pvs_id '" + r.pvs_id + "' is not in the stimulus catalog");
      reps[r.subject_id].insert(r.repetition);
    }
    for (const auto& [subject, set] : reps) {
      subjects_.push_back(subject);
      max_reps_.push_back(*set.rbegin());
      if (check == repetition_check::contiguous && static_cast<int>(set.size()) != *set.rbegin())
        throw invalid_dataset("repetitions of subject '" + subject + "' are not contiguous from 1");
    }
    for (std::size_t i = 0; i < subjects_.size(); ++i) subject_lookup_.emplace(subjects_[i], i);

    offsets_.resize(subjects_.size() + 1, 0);
    for (std::size_t i = 0; i < subjects_.size(); ++i)
      offsets_[i + 1] = offsets_[i] + static_cast<std::size_t>(max_reps_[i]) * catalog_.size();
    cube_.assign(offsets_.back(), 0);
    for (const auto& r : records_) {
      const std::size_t i = subject_lookup_.at(r.subject_id);
      cube_[offsets_[i] + static_cast<std::size_t>(r.repetition - 1) * catalog_.size() +
            stimulus_lookup_.at(r.pvs_id)] = static_cast<std::int8_t>(r.vote.value());
    }
  }

  const std::vector<RatingRecord>& records() const noexcept { return records_; }
  const std::vector<Stimulus>& catalog() const noexcept { return catalog_; }
  const std::vector<std::string>& subjects() const noexcept { return subjects_; }
  std::size_t subject_count() const noexcept { return subjects_.size(); }
  std::size_t stimulus_count() const noexcept { return catalog_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::optional<std::size_t> stimulus_index(const std::string& pvs_id) const {
    auto it = stimulus_lookup_.find(pvs_id);
    if (it == stimulus_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> subject_index(const std::string& subject_id) const {
    auto it = subject_lookup_.find(subject_id);
    if (it == subject_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t require_subject(const std::string& subject_id) const {
    auto i = subject_index(subject_id);
    if (!i) throw missing_data("unknown subject '" + subject_id + "'");
    return *i;
  }

  /// Highest repetition number recorded for subject i.
  int repetitions(std::size_t subject) const { return max_reps_.at(subject); }

  /// Smallest per-subject repetition count.
  int min_repetitions() const {
    if (max_reps_.empty()) return 0;
    return *std::min_element(max_reps_.begin(), max_reps_.end());
  }

  /// Vote of subject i, repetition r (1-based), stimulus j; 0 when missing.
  int vote(std::size_t subject, int repetition, std::size_t stimulus) const {
    if (repetition < 1 || repetition > max_reps_[subject]) return 0;
    return cube_[offsets_[subject] + static_cast<std::size_t>(repetition - 1) * catalog_.size() + stimulus];
  }

  /// Keeps records satisfying `keep`; the catalog is preserved.
  RatingDataset filter(const std::function<bool(const RatingRecord&)>& keep,
                       repetition_check check = repetition_check::relaxed) const {
    std::vector<RatingRecord> out;
    for (const auto& r : records_)
      if (keep(r)) out.push_back(r);
    return RatingDataset(std::move(out), catalog_, check);
  }

  RatingDataset select_subjects(const std::vector<std::string>& ids) const {
    std::set<std::string> wanted(ids.begin(), ids.end());
    for (const auto& id : wanted) require_subject(id);
    return filter([&](const RatingRecord& r) { return wanted.count(r.subject_id) > 0; },
                  repetition_check::contiguous);
  }

  /// Keeps repetitions 1..n of every subject.
  RatingDataset first_repetitions(int n) const {
    return filter([n](const RatingRecord& r) { return r.repetition <= n; }, repetition_check::contiguous);
  }

  RatingDataset first_repetition() const { return first_repetitions(1); }

  /// Restricts both catalog and records to one content group.
  RatingDataset select_group(const std::string& content_group) const {
    std::vector<Stimulus> cat;
    for (const auto& s : catalog_)
      if (s.content_group == content_group) cat.push_back(s);
    if (cat.empty()) throw missing_data("no stimuli in content group '" + content_group + "'");
    std::vector<RatingRecord> out;
    for (const auto& r : records_)
      if (catalog_[stimulus_lookup_.at(r.pvs_id)].content_group == content_group) out.push_back(r);
    return RatingDataset(std::move(out), std::move(cat), repetition_check::relaxed);
  }

  bool operator==(const RatingDataset& o) const { return records_ == o.records_ && catalog_ == o.catalog_; }

 private:
  void derive_catalog() {
    std::map<std::string, Stimulus> seen;
    for (const auto& r : records_) {
      auto [it, inserted] = seen.emplace(r.pvs_id, Stimulus{r.pvs_id, r.content_group, r.src_id, {}});
      if (!inserted && (it->second.content_group != r.content_group || it->second.src_id != r.src_id))
        throw invalid_dataset("inconsistent content_group/src_id for pvs '" + r.pvs_id + "'");
    }
    for (auto& [id, s] : seen) catalog_.push_back(std::move(s));
  }

  std::vector<RatingRecord> records_;
  std::vector<Stimulus> catalog_;
  std::vector<std::string> subjects_;
  std::vector<int> max_reps_;
  std::unordered_map<std::string, std::size_t> stimulus_lookup_;
  std::unordered_map<std::string, std::size_t> subject_lookup_;
  std::vector<std::size_t> offsets_;
  std::vector<std::int8_t> cube_;
};

}  // namespace fowr
