#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "error.hpp"

namespace fowr {

struct MosEntry {
  std::string pvs_id;
  double mos = 0.0;
  double ci95 = 0.0;  // half-width of the 95% interval
  std::size_t count = 0;

  bool operator==(const MosEntry&) const = default;
};

/// Per-stimulus MOS keyed by pvs_id, in insertion order.
class MosVector {
 public:
  MosVector() = default;
  explicit MosVector(std::vector<MosEntry> entries) {
    for (auto& e : entries) push_back(std::move(e));
  }

  void push_back(MosEntry e) {
    if (!index_.emplace(e.pvs_id, entries_.size()).second)
      throw invalid_dataset("duplicate pvs_id in MOS vector: " + e.pvs_id);
    entries_.push_back(std::move(e));
  }

  const MosEntry* find(const std::string& pvs_id) const {
    auto it = index_.find(pvs_id);
    return it == index_.end() ? nullptr : &entries_[it->second];
  }

  const MosEntry& at(const std::string& pvs_id) const {
    if (auto* e = find(pvs_id)) return *e;
    throw missing_data("stimulus '" + pvs_id + "' has no MOS");
  }

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(entries_.size());
    for (const auto& e : entries_) v.push_back(e.mos);
    return v;
  }

  const std::vector<MosEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool operator==(const MosVector& o) const { return entries_ == o.entries_; }

 private:
  std::vector<MosEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace fowr
