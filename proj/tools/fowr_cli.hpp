#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <fowr/fowr.hpp>
#include <fowr/report.hpp>
#include <fowr/server.hpp>

// Command-line front end. run() is separate from main() so tests can drive
// it in-process with captured streams.
namespace fowr::cli {

using json = nlohmann::json;

enum exit_code : int { ok = 0, usage = 2, data = 3 };

inline std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

/// FNV-1a of a file's bytes, so reports pin the exact inputs.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw missing_data("cannot open file '" + path + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return hex(fnv1a(bytes));
}

inline json input_entry(const std::string& path) { return {{"path", path}, {"fnv1a", file_digest(path)}}; }

/// Report envelope: invocation metadata, result payload, optional series.
inline json bundle(const std::string& command, std::uint64_t seed, const json& config, json result,
                   json series = nullptr) {
  json b{{"tool", "fowr"},
         {"command", command},
         {"seed", seed},
         {"config", config},
         {"config_digest", hex(fnv1a(config.dump()))},
         {"result", std::move(result)}};
  if (!series.is_null()) b["series"] = std::move(series);
  return b;
}

inline std::string fixed(double v, int digits = 3) {
  if (!std::isfinite(v)) return "na";
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::string fixed(const std::optional<double>& v, int digits = 3) { return v ? fixed(*v, digits) : "na"; }

inline std::string design_set(const DesignRecommendation& d) {
  std::string s = "{";
  for (std::size_t k = 0; k < d.designs.size(); ++k) {
    if (k) s += ",";
    s += "(" + std::to_string(d.designs[k].subjects) + "," + std::to_string(d.designs[k].repetitions) + ")";
  }
  return s + "}";
}

inline MosVector truth_vector(const RatingDataset& ratings, const std::vector<double>& psi) {
  MosVector v;
  for (std::size_t j = 0; j < psi.size(); ++j) v.push_back({ratings.catalog()[j].pvs_id, psi[j], 0.0, 0});
  return v;
}

struct Common {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
  std::string format = "table";
};

inline void add_common(CLI::App* app, Common& c, bool with_out = true) {
  app->add_option("--seed", c.seed, "seed for every random draw");
  app->add_option("--threads", c.threads, "worker threads (0 = all cores); results do not depend on it");
  if (with_out) app->add_option("--out", c.out, "write the JSON report to this file");
  app->add_option("--format", c.format, "stdout format")->check(CLI::IsMember({"table", "json"}));
}

/// Prints the table (or the JSON) and writes the report file.
inline void emit(const Common& c, const json& report, const std::string& table, std::ostream& out) {
  if (c.format == "json")
    out << report.dump(2) << "\n";
  else
    out << table;
  if (!c.out.empty()) {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw missing_data("cannot open file '" + c.out + "' for writing");
    f << report.dump(2) << "\n";
  }
}

struct SimulateArgs {
  Common common;
  PanelSpec spec;
  std::string psi_file, truth, lab = "sim", group = "test";
};

inline int simulate(const SimulateArgs& a, std::ostream& out) {
  PanelSpec spec = a.spec;
  spec.seed = a.common.seed;
  SimulationLayout layout;
  layout.lab = a.lab;
  json config{{"subjects", spec.subjects},          {"reps", spec.repetitions},
              {"sigma_delta", spec.sigma_delta},    {"subject_noise", spec.subject_noise},
              {"stimulus_noise", spec.stimulus_noise}, {"anchoring", spec.anchoring},
              {"lab", a.lab},                       {"group", a.group}};
  if (!a.psi_file.empty()) {
    const auto psi = io::read_mos_vector(a.psi_file);
    spec.psi.clear();
    for (const auto& e : psi) {
      spec.psi.push_back(e.mos);
      layout.catalog.push_back({e.pvs_id, a.group, "", ""});
    }
    config["psi_file"] = input_entry(a.psi_file);
  } else {
    layout.catalog = default_catalog(spec.stimuli, a.group);
    config["stimuli"] = spec.stimuli;
    config["psi_min"] = spec.psi_min;
    config["psi_max"] = spec.psi_max;
  }
  const auto panel = simulate_panel(spec, layout);
  io::write_ratings(panel.ratings, a.common.out);
  if (!a.truth.empty()) io::write_mos_vector(truth_vector(panel.ratings, panel.model.psi), a.truth);
  out << "simulated " << panel.ratings.subject_count() << " subjects x " << panel.ratings.stimulus_count()
      << " stimuli x " << spec.repetitions << " repetitions -> " << a.common.out << "\n"
      << "seed " << spec.seed << ", config digest " << hex(fnv1a(config.dump())) << "\n";
  return ok;
}

struct AnalyzeArgs {
  Common common;
  std::string test, ref, ground_truth, group;
  std::size_t subjects = 0;
  int reps = 0;
  std::size_t trials = 1000;
  bool treatments = false;
};

inline int analyze(const AnalyzeArgs& a, std::ostream& out) {
  const auto test = io::read_ratings(a.test);
  json config{{"test", input_entry(a.test)}, {"group", a.group}};
  json result;
  std::ostringstream table;

  std::optional<RatingDataset> ref;
  std::optional<MosVector> gt;
  if (!a.ref.empty()) {
    ref = io::read_ratings(a.ref);
    config["ref"] = input_entry(a.ref);
  }
  if (!a.ground_truth.empty()) {
    gt = io::read_mos_vector(a.ground_truth);
    config["ground_truth"] = input_entry(a.ground_truth);
  }

  if (a.subjects > 0) {
    SubsetStudyConfig cfg;
    cfg.n_subjects = a.subjects;
    cfg.n_repetitions = a.reps > 0 ? a.reps : 1;
    cfg.n_trials = a.trials;
    cfg.seed = a.common.seed;
    cfg.content_group = a.group;
    cfg.threads = a.common.threads;
    StudyReference sref;
    if (gt) {
      cfg.target = ComparisonTarget::ground_truth;
      sref.ground_truth = &*gt;
    } else {
      sref.baseline_ratings = ref ? &*ref : &test;
    }
    config.update({{"subjects", cfg.n_subjects}, {"reps", cfg.n_repetitions}, {"trials", cfg.n_trials}});
    const auto r = subset_study(cfg, test, sref);
    result = report::to_json(r);
    table << "subset study N=" << cfg.n_subjects << " R=" << cfg.n_repetitions << " trials=" << cfg.n_trials << " ("
          << result["target"].get<std::string>() << ", " << r.n_stimuli << " stimuli)\n"
          << "metric  median  p05     p95\n";
    for (const auto& [name, d] : {std::pair{"pcc", &r.metrics.pcc}, {"rmse", &r.metrics.rmse}, {"mos05", &r.metrics.mos05}})
      table << std::left << std::setw(8) << name << fixed(d->median) << "   " << fixed(d->p05) << "   " << fixed(d->p95)
            << "\n";
    table << "combined bias sd " << fixed(r.bias.stddev) << " (predicted " << fixed(r.bias.predicted) << ")\n";
  } else {
    if (!ref && !gt) throw invalid_parameter("analyze needs --ref or --ground-truth");
    const auto test_mos = mos(a.group.empty() ? test : test.select_group(a.group));
    const auto rep = compare(test_mos, gt ? *gt : mos(*ref));
    result = {{"comparison", report::to_json(rep)}, {"mos", report::to_json(test_mos)}};
    table << "stimuli " << rep.n_stimuli << "\npcc     " << fixed(rep.pcc) << "\nrmse    " << fixed(rep.rmse)
          << "\nmos05   " << fixed(rep.mos05) << "\n";
  }
  if (a.treatments) {
    const auto t = repetition_treatments(test);
    result["treatments"] = {{"first_vs_average", report::to_json(t.first_vs_average)},
                            {"last_vs_average", report::to_json(t.last_vs_average)},
                            {"first_vs_last", report::to_json(t.first_vs_last)}};
    table << "treatment          pcc    rmse   mos05\n";
    for (const auto& [name, c] : {std::pair{"first vs average", &t.first_vs_average},
                                  {"last vs average", &t.last_vs_average},
                                  {"first vs last", &t.first_vs_last}})
      table << std::left << std::setw(19) << name << fixed(c->pcc) << "  " << fixed(c->rmse) << "  " << fixed(c->mos05)
            << "\n";
  }
  config["treatments"] = a.treatments;
  emit(a.common, bundle("analyze", a.common.seed, config, result), table.str(), out);
  return ok;
}

/// Baseline MOS: the ground-truth file when given, else the MOS of the first
/// repetition of the reference ratings (or of the test ratings).
inline MosVector resolve_baseline(const RatingDataset& test, const std::string& ref, const std::string& ground_truth,
                                  json& config) {
  if (!ground_truth.empty()) {
    config["ground_truth"] = input_entry(ground_truth);
    return io::read_mos_vector(ground_truth);
  }
  if (!ref.empty()) {
    config["ref"] = input_entry(ref);
    return mos(io::read_ratings(ref).first_repetition());
  }
  return mos(test.first_repetition());
}

struct ConvergeArgs {
  Common common;
  std::string test, ref, ground_truth;
};

inline int converge(const ConvergeArgs& a, std::ostream& out) {
  const auto test = io::read_ratings(a.test);
  json config{{"test", input_entry(a.test)}};
  const auto baseline = resolve_baseline(test, a.ref, a.ground_truth, config);
  const auto curves = convergence_curves(test, baseline);
  const auto series = report::series_table(curves);
  std::ostringstream table;
  table << "direction treatment metric repetition mean ci_low ci_high\n";
  for (const auto& row : series)
    table << row["direction"].get<std::string>() << " " << row["treatment"].get<std::string>() << " "
          << row["metric"].get<std::string>() << " " << row["repetition"].get<int>() << " "
          << fixed(row["mean"].is_null() ? NAN : row["mean"].get<double>(), 4) << " "
          << fixed(row["ci_low"].is_null() ? NAN : row["ci_low"].get<double>(), 4) << " "
          << fixed(row["ci_high"].is_null() ? NAN : row["ci_high"].get<double>(), 4) << "\n";
  json result{{"max_repetitions", curves.max_repetitions}, {"n_subjects", test.subject_count()}};
  emit(a.common, bundle("converge", a.common.seed, config, result, series), table.str(), out);
  return ok;
}

struct BiasArgs {
  Common common;
  std::string test, ref, ground_truth, anchor_group, test_group, prior;
  double alpha = 0.05;
  std::vector<std::size_t> samples{5, 10, 20, 40};
  std::size_t trials = 1000;
};

inline int bias(const BiasArgs& a, std::ostream& out) {
  const auto test = io::read_ratings(a.test);
  json config{{"test", input_entry(a.test)}, {"alpha", a.alpha}, {"samples", a.samples}, {"trials", a.trials}};
  // the anchor analysis needs the ground truth for its test group only
  const bool anchored = !a.anchor_group.empty();
  const auto baseline = anchored ? mos(test) : resolve_baseline(test, a.ref, a.ground_truth, config);
  std::ostringstream table;
  json result;

  const auto est = subject_bias(test, baseline);
  result["bias"] = report::to_json(est);
  table << "subject  global_bias  sessions\n";
  for (const auto& s : est.subjects)
    table << std::left << std::setw(9) << s.subject_id << std::setw(13) << fixed(s.global) << s.sessions.size() << "\n";

  if (test.subject_count() > 0 && test.min_repetitions() >= 2) {
    const auto st = bias_stability(test, baseline, a.alpha);
    result["stability"] = report::to_json(st);
    table << "stability: " << st.subjects_without_significant_sessions() << "/" << st.subjects.size()
          << " subjects without a significant session bias change (corrected alpha " << fixed(st.corrected_alpha, 5)
          << ")\n";
    json changes = json::array();
    for (const auto& id : test.subjects()) {
      const std::size_t i = *test.subject_index(id);
      for (int r = 2; r <= test.repetitions(i); ++r)
        changes.push_back({{"subject_id", id}, {"repetition", r}, {"fraction", vote_change_fraction(test, id, r)}});
    }
    result["vote_changes"] = changes;
  }

  json errors = json::array();
  std::size_t max_n = test.stimulus_count();
  for (const auto& s : est.subjects)
    for (const auto& x : s.sessions) max_n = std::min(max_n, x.n);
  table << "samples  rms_error\n";
  for (std::size_t n : a.samples) {
    if (n > max_n) continue;
    const double e = bias_estimation_error(test, baseline, n, a.trials, a.common.seed, a.common.threads);
    errors.push_back({{"samples", n}, {"rms_error", e}});
    table << std::left << std::setw(9) << n << fixed(e, 4) << "\n";
  }
  result["estimation_error"] = errors;

  const bool labelled = std::all_of(test.catalog().begin(), test.catalog().end(),
                                    [](const Stimulus& s) { return !s.src_id.empty(); });
  if (labelled && test.stimulus_count() > 0) result["per_src"] = report::to_json(per_src_bias_error(test, baseline));

  if (anchored) {
    if (a.prior.empty() || a.ground_truth.empty() || a.test_group.empty())
      throw invalid_parameter("anchor correction needs --prior, --ground-truth and --test-group");
    config.update({{"anchor_group", a.anchor_group}, {"test_group", a.test_group}, {"prior", input_entry(a.prior)},
                   {"ground_truth", input_entry(a.ground_truth)}});
    const auto r = anchor_bias_correction(test, a.anchor_group, a.test_group, io::read_mos_vector(a.prior),
                                          io::read_mos_vector(a.ground_truth));
    result["anchor_correction"] = report::to_json(r);
    table << "anchor correction  pcc    rmse   mos05\n";
    for (const auto& [name, c] :
         {std::pair{"uncorrected", &r.uncorrected}, {"pooled", &r.pooled}, {"per subject", &r.per_subject}})
      table << std::left << std::setw(19) << name << fixed(c->pcc) << "  " << fixed(c->rmse) << "  " << fixed(c->mos05)
            << "\n";
  }
  emit(a.common, bundle("bias", a.common.seed, config, result), table.str(), out);
  return ok;
}

struct ConfusionArgs {
  Common common;
  std::string test, group;
  std::vector<std::string> refs;
  double alpha = 0.05;
  bool grid = false;
  int subjects = 8, reps = 10;
  std::size_t trials = 50;
};

inline int confusion_cmd(const ConfusionArgs& a, std::ostream& out) {
  const auto test = io::read_ratings(a.test);
  std::vector<RatingDataset> labs;
  json config{{"test", input_entry(a.test)}, {"alpha", a.alpha}, {"group", a.group}}, refs = json::array();
  for (const auto& p : a.refs) {
    labs.push_back(io::read_ratings(p));
    refs.push_back(input_entry(p));
  }
  config["refs"] = refs;
  std::ostringstream table;
  json result;
  if (!a.grid) {
    json per_lab = json::array();
    table << "reference  agree  disagree  tie  eq15  eq24\n";
    for (std::size_t k = 0; k < labs.size(); ++k) {
      const auto r = confusion(test, labs[k], a.alpha, a.group);
      per_lab.push_back(report::to_json(r));
      table << std::left << std::setw(11) << a.refs[k] << fixed(r.agree) << "  " << fixed(r.disagree) << "     "
            << fixed(r.tie_involved) << "  " << (r.equivalent_15 ? "yes" : "no ") << "   "
            << (r.equivalent_24 ? "yes" : "no") << "\n";
    }
    result["confusion"] = per_lab;
  } else {
    GridConfig cfg;
    cfg.subjects.clear();
    cfg.repetitions.clear();
    for (int n = 1; n <= a.subjects; ++n) cfg.subjects.push_back(n);
    for (int r = 1; r <= a.reps; ++r) cfg.repetitions.push_back(r);
    cfg.trials_per_lab = a.trials;
    cfg.alpha = a.alpha;
    cfg.seed = a.common.seed;
    cfg.content_group = a.group;
    cfg.threads = a.common.threads;
    config.update({{"grid", true}, {"subjects", a.subjects}, {"reps", a.reps}, {"trials", a.trials}});
    std::vector<const RatingDataset*> ptrs;
    for (const auto& l : labs) ptrs.push_back(&l);
    const auto grids = likelihood_grids(test, ptrs, cfg);
    result["grids"] = {{"15", report::to_json(grids.fifteen)}, {"24", report::to_json(grids.twenty_four)}};
    for (const auto* g : {&grids.fifteen, &grids.twenty_four}) {
      table << "equivalence to a " << to_string(g->target) << "-subject test (% of trials), rows R, columns N\n   ";
      for (int n : g->subjects) table << std::setw(5) << n;
      table << "\n";
      for (std::size_t r = 0; r < g->repetitions.size(); ++r) {
        table << std::setw(3) << g->repetitions[r];
        for (std::size_t c = 0; c < g->subjects.size(); ++c) table << std::setw(5) << fixed(g->percent[g->cell(r, c)], 0);
        table << "\n";
      }
    }
  }
  emit(a.common, bundle("confusion", a.common.seed, config, result), table.str(), out);
  return ok;
}

struct DesignArgs {
  Common common;
  std::string grid, target = "15";
  DesignOptions options;
};

/// Accepts a bare grid document or a confusion report holding both grids.
inline LikelihoodGrid load_grid(const std::string& path, EquivalenceTarget target) {
  std::ifstream in(path);
  if (!in) throw missing_data("cannot open file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw parse_error(path + ": " + e.what(), 0);
  }
  if (j.contains("result") && j["result"].contains("grids")) return io::grid_from_json(j["result"]["grids"].at(to_string(target)));
  return io::grid_from_json(j);
}

inline int design(const DesignArgs& a, std::ostream& out) {
  const auto target = parse_target(a.target);
  json config{{"target", a.target}};
  DesignRecommendation rec;
  if (a.grid.empty()) {
    rec = default_recommendation(target);
    config["grid"] = nullptr;
  } else {
    config.update({{"grid", input_entry(a.grid)},
                   {"margin", a.options.margin},
                   {"threshold", a.options.threshold},
                   {"min_subjects", a.options.min_subjects},
                   {"max_subjects", a.options.max_subjects}});
    rec = recommend(load_grid(a.grid, target), target, a.options);
  }
  std::ostringstream table;
  table << design_set(rec) << "\n";
  if (!rec.note.empty()) table << rec.note << "\n";
  emit(a.common, bundle("design", a.common.seed, config, report::to_json(rec)), table.str(), out);
  return ok;
}

struct ScreenArgs {
  Common common;
  std::string test;
  int threshold = 95;
};

inline int screen(const ScreenArgs& a, std::ostream& out) {
  const auto test = io::read_ratings(a.test);
  json config{{"test", input_entry(a.test)}, {"threshold", a.threshold}};
  const auto rel = reliability_filter(test, a.threshold);
  const auto bt = bt500_screen(test);
  json result{{"bt500", report::to_json(bt)}, {"reliability", report::to_json(rel)}};
  std::ostringstream table;
  table << "subject  P    Q    votes  rejected\n";
  for (const auto& s : bt.subjects)
    table << std::left << std::setw(9) << s.subject_id << std::setw(5) << s.above << std::setw(5) << s.below
          << std::setw(7) << s.votes << (s.rejected ? "yes" : "no") << "\n";
  table << "sessions below reliability " << a.threshold << ": " << rel.flagged.size() << " of "
        << rel.flagged.size() + rel.passed.size() << "\n";
  emit(a.common, bundle("screen", a.common.seed, config, result), table.str(), out);
  return ok;
}

struct ServeArgs {
  std::string config, log, host = "127.0.0.1";
  int port = 8080;
};

inline int serve(const ServeArgs& a, std::ostream& out) {
  SessionStore store(io::read_experiment_config(a.config), a.log);
  httplib::Server server;
  register_routes(server, store);
  out << "serving '" << store.config().name << "' on http://" << a.host << ":" << a.port << "\n" << std::flush;
  if (!server.listen(a.host, a.port)) throw error("cannot listen on " + a.host + ":" + std::to_string(a.port));
  return ok;
}

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-observers-with-repetitions analysis toolkit", "fowr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fowr 0.1.0");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "simulate an experiment from the observer model");
  add_common(s, sim.common, false);
  s->add_option("--out", sim.common.out, "rating file to write")->required();
  s->add_option("--subjects", sim.spec.subjects)->check(CLI::PositiveNumber);
  s->add_option("--stimuli", sim.spec.stimuli)->check(CLI::PositiveNumber);
  s->add_option("--reps", sim.spec.repetitions)->check(CLI::PositiveNumber);
  s->add_option("--sigma-delta", sim.spec.sigma_delta)->check(CLI::NonNegativeNumber);
  s->add_option("--subject-noise", sim.spec.subject_noise)->check(CLI::NonNegativeNumber);
  s->add_option("--stimulus-noise", sim.spec.stimulus_noise)->check(CLI::NonNegativeNumber);
  s->add_option("--anchoring", sim.spec.anchoring)->check(CLI::Range(0.0, 1.0));
  s->add_option("--psi-min", sim.spec.psi_min)->check(CLI::Range(1.0, 5.0));
  s->add_option("--psi-max", sim.spec.psi_max)->check(CLI::Range(1.0, 5.0));
  s->add_option("--psi", sim.psi_file, "MOS file giving the true quality of each stimulus");
  s->add_option("--truth", sim.truth, "also write the true quality as a MOS file");
  s->add_option("--lab", sim.lab);
  s->add_option("--group", sim.group, "content group of the simulated stimuli");

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "compare MOS with a reference, or run a subset study");
  add_common(a, an.common);
  a->add_option("--test", an.test)->required();
  a->add_option("--ref", an.ref, "reference rating file");
  a->add_option("--ground-truth", an.ground_truth, "ground-truth MOS file");
  a->add_option("--group", an.group, "restrict to one content group");
  a->add_option("--subjects", an.subjects, "subset size N (enables the subset study)")->check(CLI::PositiveNumber);
  a->add_option("--reps", an.reps, "repetitions R per subset subject")->check(CLI::PositiveNumber);
  a->add_option("--trials", an.trials)->check(CLI::PositiveNumber);
  a->add_flag("--treatments", an.treatments, "first / last / average vote comparisons");

  ConvergeArgs cv;
  auto* c = app.add_subcommand("converge", "individual-subject convergence series");
  add_common(c, cv.common);
  c->add_option("--test", cv.test)->required();
  c->add_option("--ref", cv.ref, "rating file whose first repetition is the baseline");
  c->add_option("--ground-truth", cv.ground_truth, "ground-truth MOS file used as the baseline");

  BiasArgs bi;
  auto* b = app.add_subcommand("bias", "subject bias estimates, stability and estimation error");
  add_common(b, bi.common);
  b->add_option("--test", bi.test)->required();
  b->add_option("--ref", bi.ref);
  b->add_option("--ground-truth", bi.ground_truth);
  b->add_option("--alpha", bi.alpha)->check(CLI::Range(1e-12, 0.999999));
  b->add_option("--samples", bi.samples, "stimulus counts for the estimation error")->delimiter(',');
  b->add_option("--trials", bi.trials)->check(CLI::PositiveNumber);
  b->add_option("--anchor-group", bi.anchor_group);
  b->add_option("--test-group", bi.test_group);
  b->add_option("--prior", bi.prior, "prior MOS of the anchor stimuli");

  ConfusionArgs cf;
  auto* f = app.add_subcommand("confusion", "pairwise agreement with reference labs, or equivalence grids");
  add_common(f, cf.common);
  f->add_option("--test", cf.test)->required();
  f->add_option("--ref", cf.refs, "reference lab rating file (repeatable)")->required();
  f->add_option("--alpha", cf.alpha)->check(CLI::Range(1e-12, 0.999999));
  f->add_option("--group", cf.group);
  f->add_flag("--grid", cf.grid, "compute likelihood grids over N and R");
  f->add_option("--subjects", cf.subjects, "largest N in the grid")->check(CLI::PositiveNumber);
  f->add_option("--reps", cf.reps, "largest R in the grid")->check(CLI::PositiveNumber);
  f->add_option("--trials", cf.trials, "trials per reference lab and cell")->check(CLI::PositiveNumber);

  DesignArgs de;
  auto* d = app.add_subcommand("design", "recommend (N, R) designs from a likelihood grid");
  add_common(d, de.common);
  d->add_option("--grid", de.grid, "grid document or confusion report");
  d->add_option("--target", de.target)->check(CLI::IsMember({"15", "24"}));
  d->add_option("--margin", de.options.margin)->check(CLI::NonNegativeNumber);
  d->add_option("--threshold", de.options.threshold)->check(CLI::Range(0.0, 100.0));
  d->add_option("--min-subjects", de.options.min_subjects)->check(CLI::PositiveNumber);
  d->add_option("--max-subjects", de.options.max_subjects)->check(CLI::PositiveNumber);

  ScreenArgs sc;
  auto* r = app.add_subcommand("screen", "BT.500 observer screening and reliability filter");
  add_common(r, sc.common);
  r->add_option("--test", sc.test)->required();
  r->add_option("--threshold", sc.threshold, "minimum screen-test reliability index")->check(CLI::Range(0, 100));

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "run the session service");
  v->add_option("--config", sv.config, "experiment config (JSON)")->required();
  v->add_option("--log", sv.log, "event log (JSON lines)")->required();
  v->add_option("--host", sv.host);
  v->add_option("--port", sv.port)->check(CLI::Range(1, 65535));

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try {
    if (s->parsed()) return simulate(sim, out);
    if (a->parsed()) return analyze(an, out);
    if (c->parsed()) return converge(cv, out);
    if (b->parsed()) return bias(bi, out);
    if (f->parsed()) return confusion_cmd(cf, out);
    if (d->parsed()) return design(de, out);
    if (r->parsed()) return screen(sc, out);
    if (v->parsed()) return serve(sv, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return data;
  }
  return usage;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace fowr::cli
