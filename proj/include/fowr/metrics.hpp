#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "error.hpp"
#include "mos_vector.hpp"

namespace fowr {

// Association, agreement and perceptual similarity between two MOS vectors.

namespace detail {

inline void require_same_length(std::span<const double> a, std::span<const double> b, std::size_t min_len) {
  if (a.size() != b.size())
    throw length_mismatch("metric inputs differ in length (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  if (a.size() < min_len)
    throw invalid_parameter("metric needs at least " + std::to_string(min_len) + " values");
}

}  // namespace detail

/// Pearson linear correlation. Throws undefined_correlation when either
/// input is constant.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a, b, 3);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ma += a[k];
    mb += b[k];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double da = a[k] - ma, db = b[k] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) throw undefined_correlation("correlation undefined for a constant vector");
  // sqrt(saa * saa) == saa exactly, so pearson(a, a) is exactly 1.
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Pearson correlation, or nothing when undefined.
inline std::optional<double> try_pearson(std::span<const double> a, std::span<const double> b) {
  try {
    return pearson(a, b);
  } catch (const undefined_correlation&) {
    return std::nullopt;
  }
}

inline double rmse(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a, b, 1);
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) ss += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(ss / static_cast<double>(a.size()));
}

/// Fraction of positions whose values differ by strictly less than 0.5.
inline double mos05(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a, b, 1);
  std::size_t similar = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::fabs(a[k] - b[k]) < 0.5) ++similar;
  return static_cast<double>(similar) / static_cast<double>(a.size());
}

struct ComparisonReport {
  std::optional<double> pcc;  // absent when undefined (constant input or fewer than 3 stimuli)
  double rmse = 0.0;
  double mos05 = 0.0;
  std::size_t n_stimuli = 0;
};

inline ComparisonReport compare(std::span<const double> a, std::span<const double> b) {
  detail::require_same_length(a, b, 1);
  ComparisonReport rep;
  rep.n_stimuli = a.size();
  if (a.size() >= 3) rep.pcc = try_pearson(a, b);
  rep.rmse = rmse(a, b);
  rep.mos05 = mos05(a, b);
  return rep;
}

/// Compares two MOS vectors on the stimuli they share (inner join on pvs_id,
/// in the order of `a`).
inline ComparisonReport compare(const MosVector& a, const MosVector& b) {
  std::vector<double> va, vb;
  for (const auto& e : a) {
    if (const auto* other = b.find(e.pvs_id)) {
      va.push_back(e.mos);
      vb.push_back(other->mos);
    }
  }
  if (va.empty()) throw missing_data("MOS vectors share no stimulus identifiers");
  return compare(va, vb);
}

}  // namespace fowr
