#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace fowr {

/// Generative subject model: a vote is psi_j + delta_i + upsilon_i X + phi_j Y
/// with X, Y standard normal, rounded half away from zero and clamped to the
/// ACR scale. With probability `anchoring` a repeat vote copies the subject's
/// previous vote for the same stimulus instead.
struct ObserverModel {
  std::vector<double> psi;      // true quality per stimulus, in [1, 5]
  std::vector<double> delta;    // bias per subject
  std::vector<double> upsilon;  // noise magnitude per subject
  std::vector<double> phi;      // noise magnitude per stimulus
  double sigma_delta = 0.34;
  double anchoring = 0.0;

  static constexpr double default_subject_noise = 0.3;
  static constexpr double default_stimulus_noise = 0.3;

  static ObserverModel with_uniform_noise(std::vector<double> psi, std::vector<double> delta,
                                          double subject_noise = default_subject_noise,
                                          double stimulus_noise = default_stimulus_noise,
                                          double anchoring = 0.0, double sigma_delta = 0.34) {
    ObserverModel m;
    m.upsilon.assign(delta.size(), subject_noise);
    m.phi.assign(psi.size(), stimulus_noise);
    m.psi = std::move(psi);
    m.delta = std::move(delta);
    m.anchoring = anchoring;
    m.sigma_delta = sigma_delta;
    return m;
  }

  std::size_t subjects() const noexcept { return delta.size(); }
  std::size_t stimuli() const noexcept { return psi.size(); }

  void validate() const {
    if (psi.empty() || delta.empty()) throw invalid_parameter("observer model needs at least one stimulus and subject");
    if (upsilon.size() != delta.size()) throw invalid_parameter("upsilon must have one entry per subject");
    if (phi.size() != psi.size()) throw invalid_parameter("phi must have one entry per stimulus");
    for (double v : psi)
      if (!(v >= 1.0 && v <= 5.0)) throw invalid_parameter("psi outside [1, 5]");
    for (double v : upsilon)
      if (!(v >= 0.0)) throw invalid_parameter("negative subject noise magnitude");
    for (double v : phi)
      if (!(v >= 0.0)) throw invalid_parameter("negative stimulus noise magnitude");
    if (!(anchoring >= 0.0 && anchoring <= 1.0)) throw invalid_parameter("anchoring probability outside [0, 1]");
    if (!(sigma_delta >= 0.0)) throw invalid_parameter("negative sigma_delta");
  }
};

/// n independent draws of N(0, sigma); deterministic for a fixed seed.
inline std::vector<double> sample_population_bias(std::size_t n_subjects, double sigma_delta, std::uint64_t seed) {
  if (n_subjects < 1) throw invalid_parameter("need at least one subject");
  if (!(sigma_delta >= 0.0)) throw invalid_parameter("sigma_delta must be non-negative");
  std::vector<double> out(n_subjects, 0.0);
  if (sigma_delta == 0.0) return out;
  rng_t rng{seed};
  std::normal_distribution<double> normal(0.0, sigma_delta);
  for (auto& d : out) d = normal(rng);
  return out;
}

/// Round half away from zero, then clamp to 1..5.
inline AcrVote discretize(double score) {
  double r = std::round(score);
  if (!(r >= 1.0)) r = 1.0;  // also maps NaN to the floor
  if (r > 5.0) r = 5.0;
  return AcrVote{static_cast<int>(r)};
}

/// Pre-discretization value of one draw.
inline double continuous_score(const ObserverModel& model, std::size_t subject, std::size_t pvs, rng_t& rng) {
  std::normal_distribution<double> normal;
  const double x = normal(rng);
  const double y = normal(rng);
  return model.psi[pvs] + model.delta[subject] + model.upsilon[subject] * x + model.phi[pvs] * y;
}

inline AcrVote sample_vote(const ObserverModel& model, std::size_t subject, std::size_t pvs,
                           std::optional<AcrVote> previous, rng_t& rng) {
  if (subject >= model.subjects() || pvs >= model.stimuli()) throw invalid_parameter("subject or stimulus index out of range");
  if (previous && model.anchoring > 0.0 && uniform_unit(rng) < model.anchoring) return *previous;
  return discretize(continuous_score(model, subject, pvs, rng));
}

/// Identifiers and labels attached to simulated votes.
struct SimulationLayout {
  std::vector<std::string> subject_ids;  // default s01, s02, ...
  std::vector<Stimulus> catalog;         // default pvs001, ... in group "test"
  std::string lab = "sim";
};

namespace detail {

inline std::string numbered(const std::string& prefix, std::size_t k, std::size_t count) {
  std::string digits = std::to_string(k);
  const std::size_t width = std::max<std::size_t>(2, std::to_string(count).size());
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

}  // namespace detail

inline std::vector<Stimulus> default_catalog(std::size_t n, const std::string& group = "test") {
  std::vector<Stimulus> cat;
  for (std::size_t j = 0; j < n; ++j) cat.push_back({detail::numbered("pvs", j + 1, std::max<std::size_t>(n, 100)), group, "", ""});
  return cat;
}

inline std::vector<std::string> default_subject_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(detail::numbered("s", i + 1, n));
  return ids;
}

/// One vote per (subject, stimulus, repetition). Subject i draws from its own
/// sub-stream of `seed`, so subjects are simulated in parallel without
/// affecting the result.
inline RatingDataset simulate_experiment(const ObserverModel& model, int n_repetitions, std::uint64_t seed,
                                         SimulationLayout layout = {}) {
  model.validate();
  if (n_repetitions < 1) throw invalid_parameter("need at least one repetition");
  if (layout.subject_ids.empty()) layout.subject_ids = default_subject_ids(model.subjects());
  if (layout.catalog.empty()) layout.catalog = default_catalog(model.stimuli());
  if (layout.subject_ids.size() != model.subjects() || layout.catalog.size() != model.stimuli())
    throw invalid_parameter("simulation layout does not match the model dimensions");

  const std::size_t J = model.stimuli();
  const auto R = static_cast<std::size_t>(n_repetitions);
  std::vector<std::vector<RatingRecord>> per_subject(model.subjects());
  parallel_for(model.subjects(), [&](std::size_t i) {
    rng_t rng = substream(seed, i);
    auto& out = per_subject[i];
    out.reserve(J * R);
    std::vector<std::optional<AcrVote>> previous(J);
    for (std::size_t r = 1; r <= R; ++r) {
      for (std::size_t j = 0; j < J; ++j) {
        const AcrVote v = sample_vote(model, i, j, previous[j], rng);
        previous[j] = v;
        const auto& s = layout.catalog[j];
        out.push_back(RatingRecord{layout.subject_ids[i], s.pvs_id, static_cast<int>(r), v, layout.lab,
                                   s.content_group, s.src_id, std::nullopt, std::nullopt});
      }
    }
  });
  std::vector<RatingRecord> records;
  records.reserve(model.subjects() * J * R);
  for (auto& v : per_subject) records.insert(records.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return RatingDataset(std::move(records), std::move(layout.catalog));
}

/// Parameters of a synthetic panel: psi uniform on [psi_min, psi_max]
/// (unless given), biases N(0, sigma_delta), shared noise magnitudes.
struct PanelSpec {
  std::size_t subjects = 20;
  std::size_t stimuli = 110;
  int repetitions = 10;
  double sigma_delta = 0.34;
  double subject_noise = ObserverModel::default_subject_noise;
  double stimulus_noise = ObserverModel::default_stimulus_noise;
  double anchoring = 0.0;
  double psi_min = 2.0;
  double psi_max = 4.0;
  std::vector<double> psi;  // overrides the uniform draw; sets the stimulus count
  std::uint64_t seed = 1;
};

struct SimulatedPanel {
  ObserverModel model;
  RatingDataset ratings;
};

/// psi, biases and votes come from sub-streams 0, 1 and 2 of the seed.
inline SimulatedPanel simulate_panel(const PanelSpec& spec, SimulationLayout layout = {}) {
  if (spec.subjects < 1) throw invalid_parameter("need at least one subject");
  if (!(spec.psi_min >= 1.0 && spec.psi_max <= 5.0 && spec.psi_min <= spec.psi_max))
    throw invalid_parameter("psi range must lie within [1, 5]");
  std::vector<double> psi = spec.psi;
  if (psi.empty()) {
    if (spec.stimuli < 1) throw invalid_parameter("need at least one stimulus");
    rng_t rng = substream(spec.seed, 0);
    psi.resize(spec.stimuli);
    for (auto& v : psi) v = spec.psi_min + (spec.psi_max - spec.psi_min) * uniform_unit(rng);
  }
  auto delta = sample_population_bias(spec.subjects, spec.sigma_delta, substream_seed(spec.seed, 1));
  auto model = ObserverModel::with_uniform_noise(std::move(psi), std::move(delta), spec.subject_noise,
                                                 spec.stimulus_noise, spec.anchoring, spec.sigma_delta);
  auto ratings = simulate_experiment(model, spec.repetitions, substream_seed(spec.seed, 2), std::move(layout));
  return {std::move(model), std::move(ratings)};
}

}  // namespace fowr
