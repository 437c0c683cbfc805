#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "confusion.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "mos_vector.hpp"

namespace fowr::io {

// Rating files: delimiter-separated text with a header row. Columns
// subject_id, pvs_id, repetition and vote are required; lab, content_group,
// src_id, session_date and reliability_index are optional and may be empty.
// Unknown columns are ignored.
inline const std::vector<std::string>& rating_columns() {
  static const std::vector<std::string> cols{"subject_id", "pvs_id",  "repetition",   "vote",
                                             "lab",        "content_group", "src_id", "session_date",
                                             "reliability_index"};
  return cols;
}

namespace detail {

inline char detect_delimiter(const std::string& header) {
  if (header.find('\t') != std::string::npos) return '\t';
  if (header.find(',') == std::string::npos && header.find(';') != std::string::npos) return ';';
  return ',';
}

inline std::vector<std::string> split_fields(const std::string& line, char delim, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw parse_error("unterminated quoted field", line_no);
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  auto issp = [](unsigned char c) { return c == ' ' || c == '\r' || c == '\t'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(s[b])) ++b;
  return s.substr(b);
}

inline std::optional<long long> parse_int(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline bool valid_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (std::size_t k : {0, 1, 2, 3, 5, 6, 8, 9})
    if (s[k] < '0' || s[k] > '9') return false;
  const int m = std::stoi(s.substr(5, 2)), d = std::stoi(s.substr(8, 2));
  return m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

inline std::string quote_if_needed(const std::string& s, char delim) {
  if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

/// Header-indexed table reader shared by rating and MOS files.
struct Table {
  char delim = ',';
  std::map<std::string, std::size_t> column;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)

  static Table read(std::istream& in, const std::vector<std::string>& required) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      if (!have_header) {
        t.delim = detect_delimiter(line);
        auto names = split_fields(line, t.delim, line_no);
        for (std::size_t k = 0; k < names.size(); ++k) {
          auto name = trim(names[k]);
          if (!t.column.emplace(name, k).second) throw parse_error("duplicate column '" + name + "'", line_no);
        }
        for (const auto& r : required)
          if (!t.column.count(r)) throw parse_error("missing required column '" + r + "'", line_no);
        have_header = true;
        continue;
      }
      auto fields = split_fields(line, t.delim, line_no);
      if (fields.size() != t.column.size())
        throw parse_error("expected " + std::to_string(t.column.size()) + " fields, found " +
                              std::to_string(fields.size()),
                          line_no);
      for (auto& f : fields) f = trim(f);
      t.rows.emplace_back(line_no, std::move(fields));
    }
    if (!have_header) throw parse_error("missing header row", 0);
    return t;
  }

  std::string get(const std::vector<std::string>& row, const std::string& name) const {
    auto it = column.find(name);
    return it == column.end() ? std::string{} : row[it->second];
  }
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw missing_data("cannot open file '" + path + "'");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write file '" + path + "'");
  return out;
}

}  // namespace detail

struct ReadOptions {
  RatingDataset::repetition_check check = RatingDataset::repetition_check::contiguous;
  std::vector<Stimulus> catalog;  // optional; derived from the rows when empty
};

inline RatingDataset read_ratings(std::istream& in, const ReadOptions& opt = {}) {
  const auto table = detail::Table::read(in, {"subject_id", "pvs_id", "repetition", "vote"});
  std::vector<RatingRecord> records;
  records.reserve(table.rows.size());
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const auto& [line, row] : table.rows) {
    RatingRecord r;
    r.subject_id = table.get(row, "subject_id");
    r.pvs_id = table.get(row, "pvs_id");
    if (r.subject_id.empty() || r.pvs_id.empty()) throw parse_error("empty subject_id or pvs_id", line);
    auto rep = detail::parse_int(table.get(row, "repetition"));
    if (!rep || *rep < 1 || *rep > 1000000) throw parse_error("repetition must be an integer >= 1", line);
    r.repetition = static_cast<int>(*rep);
    auto vote = detail::parse_int(table.get(row, "vote"));
    if (!vote) throw parse_error("vote is not an integer", line);
    if (!AcrVote::valid(static_cast<int>(*vote)) || *vote != static_cast<int>(*vote))
      throw parse_error("vote " + std::to_string(*vote) + " outside the ACR range 1..5", line);
    r.vote = AcrVote{static_cast<int>(*vote)};
    r.lab = table.get(row, "lab");
    r.content_group = table.get(row, "content_group");
    r.src_id = table.get(row, "src_id");
    if (auto d = table.get(row, "session_date"); !d.empty()) {
      if (!detail::valid_date(d)) throw parse_error("session_date '" + d + "' is not YYYY-MM-DD", line);
      r.session_date = d;
    }
    if (auto ri = table.get(row, "reliability_index"); !ri.empty()) {
      auto v = detail::parse_int(ri);
      if (!v || *v < 0 || *v > 100) throw parse_error("reliability_index must be an integer in 0..100", line);
      r.reliability_index = static_cast<int>(*v);
    }
    if (!seen.emplace(r.subject_id, r.pvs_id, r.repetition).second)
      throw parse_error("duplicate rating for (" + r.subject_id + ", " + r.pvs_id + ", " +
                            std::to_string(r.repetition) + ")",
                        line);
    records.push_back(std::move(r));
  }
  return RatingDataset(std::move(records), opt.catalog, opt.check);
}

inline RatingDataset read_ratings(const std::string& path, const ReadOptions& opt = {}) {
  auto in = detail::open_in(path);
  try {
    return read_ratings(in, opt);
  } catch (const parse_error& e) {
    throw e.in_file(path);
  }
}

/// Canonical (subject, pvs, repetition) order, comma-separated, all columns.
inline void write_ratings(const RatingDataset& ds, std::ostream& out) {
  const auto& cols = rating_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  auto q = [](const std::string& s) { return detail::quote_if_needed(s, ','); };
  for (const auto& r : ds.records()) {
    out << q(r.subject_id) << ',' << q(r.pvs_id) << ',' << r.repetition << ',' << r.vote.value() << ','
        << q(r.lab) << ',' << q(r.content_group) << ',' << q(r.src_id) << ','
        << (r.session_date ? *r.session_date : "") << ',';
    if (r.reliability_index) out << *r.reliability_index;
    out << '\n';
  }
}

inline void write_ratings(const RatingDataset& ds, const std::string& path) {
  auto out = detail::open_out(path);
  write_ratings(ds, out);
  if (!out) throw error("failed writing '" + path + "'");
}

/// MOS files: header with pvs_id and mos; optional ci95 and count columns.
inline MosVector read_mos_vector(std::istream& in) {
  const auto table = detail::Table::read(in, {"pvs_id", "mos"});
  MosVector out;
  for (const auto& [line, row] : table.rows) {
    MosEntry e;
    e.pvs_id = table.get(row, "pvs_id");
    if (e.pvs_id.empty()) throw parse_error("empty pvs_id", line);
    auto m = detail::parse_double(table.get(row, "mos"));
    if (!m) throw parse_error("mos is not a number", line);
    if (*m < 1.0 || *m > 5.0) throw parse_error("mos outside [1, 5] for '" + e.pvs_id + "'", line);
    e.mos = *m;
    if (auto ci = table.get(row, "ci95"); !ci.empty()) {
      auto v = detail::parse_double(ci);
      if (!v || *v < 0.0) throw parse_error("ci95 must be a non-negative number", line);
      e.ci95 = *v;
    }
    if (auto c = table.get(row, "count"); !c.empty()) {
      auto v = detail::parse_int(c);
      if (!v || *v < 0) throw parse_error("count must be a non-negative integer", line);
      e.count = static_cast<std::size_t>(*v);
    }
    if (out.find(e.pvs_id)) throw parse_error("duplicate pvs_id '" + e.pvs_id + "'", line);
    out.push_back(std::move(e));
  }
  return out;
}

inline MosVector read_mos_vector(const std::string& path) {
  auto in = detail::open_in(path);
  try {
    return read_mos_vector(in);
  } catch (const parse_error& e) {
    throw e.in_file(path);
  }
}

inline void write_mos_vector(const MosVector& v, std::ostream& out) {
  out << "pvs_id,mos,ci95,count\n" << std::setprecision(17);
  for (const auto& e : v) out << detail::quote_if_needed(e.pvs_id, ',') << ',' << e.mos << ',' << e.ci95 << ',' << e.count << '\n';
}

inline void write_mos_vector(const MosVector& v, const std::string& path) {
  auto out = detail::open_out(path);
  write_mos_vector(v, out);
}

/// Collection setup served by the session service.
struct ExperimentConfig {
  std::string name = "fowr";
  std::vector<Stimulus> catalog;
  int scale_min = 1;
  int scale_max = 5;
  int repetitions = 10;  // sessions requested per subject
  bool questionnaire_enabled = true;
  std::vector<std::string> questionnaire_items{"Confidence", "Focus", "Tiredness"};
  std::uint64_t seed = 1;  // per-session orders derive from this
  std::string lab;

  void validate() const {
    if (catalog.empty()) throw invalid_parameter("experiment catalog is empty");
    std::set<std::string> ids;
    for (const auto& s : catalog) {
      if (s.pvs_id.empty()) throw invalid_parameter("catalog entry without pvs_id");
      if (!ids.insert(s.pvs_id).second) throw invalid_parameter("duplicate pvs_id in catalog: " + s.pvs_id);
    }
    if (scale_min != 1 || scale_max != 5) throw invalid_parameter("only the 5-level ACR scale (1..5) is supported");
    if (repetitions < 1) throw invalid_parameter("repetitions must be >= 1");
    if (questionnaire_enabled && questionnaire_items.empty())
      throw invalid_parameter("questionnaire enabled without items");
  }
};

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j) {
  try {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.repetitions = j.value("repetitions", c.repetitions);
    c.seed = j.value("seed", c.seed);
    c.lab = j.value("lab", c.lab);
    if (j.contains("scale")) {
      c.scale_min = j.at("scale").value("min", 1);
      c.scale_max = j.at("scale").value("max", 5);
    }
    if (j.contains("questionnaire")) {
      const auto& q = j.at("questionnaire");
      c.questionnaire_enabled = q.value("enabled", true);
      if (q.contains("items")) c.questionnaire_items = q.at("items").get<std::vector<std::string>>();
    }
    for (const auto& e : j.at("catalog")) {
      Stimulus s;
      s.pvs_id = e.at("pvs_id").get<std::string>();
      s.media = e.value("media", "");
      s.content_group = e.value("content_group", "");
      s.src_id = e.value("src_id", "");
      c.catalog.push_back(std::move(s));
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw invalid_parameter(std::string("invalid experiment config: ") + e.what());
  }
}

inline ExperimentConfig read_experiment_config(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what(), 0);
  }
  return parse_experiment_config(j);
}

inline nlohmann::json to_json(const LikelihoodGrid& g) {
  nlohmann::json rows = nlohmann::json::array(), trials = nlohmann::json::array();
  for (std::size_t r = 0; r < g.repetitions.size(); ++r) {
    nlohmann::json row = nlohmann::json::array(), tr = nlohmann::json::array();
    for (std::size_t c = 0; c < g.subjects.size(); ++c) {
      const auto& p = g.percent[g.cell(r, c)];
      row.push_back(p ? nlohmann::json(*p) : nlohmann::json(nullptr));
      tr.push_back(g.trials.empty() ? 0 : g.trials[g.cell(r, c)]);
    }
    rows.push_back(std::move(row));
    trials.push_back(std::move(tr));
  }
  return {{"target", to_string(g.target)}, {"subjects", g.subjects}, {"repetitions", g.repetitions},
          {"percent", rows}, {"trials", trials}};
}

/// Grid documents: {"target", "subjects": [N...], "repetitions": [R...],
/// "percent": rows by repetition with null for not-applicable cells}.
inline LikelihoodGrid grid_from_json(const nlohmann::json& j) {
  try {
    LikelihoodGrid g;
    if (j.contains("target")) {
      const auto& t = j.at("target");
      g.target = parse_target(t.is_string() ? t.get<std::string>() : std::to_string(t.get<int>()));
    }
    g.subjects = j.at("subjects").get<std::vector<int>>();
    g.repetitions = j.at("repetitions").get<std::vector<int>>();
    const auto& rows = j.at("percent");
    if (rows.size() != g.repetitions.size()) throw invalid_parameter("grid has the wrong number of rows");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != g.subjects.size()) throw invalid_parameter("grid row " + std::to_string(r + 1) + " has the wrong width");
      for (const auto& cell : rows[r]) {
        if (cell.is_null()) {
          g.percent.emplace_back();
        } else {
          const double v = cell.get<double>();
          if (v < 0.0 || v > 100.0) throw invalid_parameter("grid percentage outside [0, 100]");
          g.percent.emplace_back(v);
        }
      }
    }
    g.trials.assign(g.percent.size(), 0);
    if (j.contains("trials"))
      for (std::size_t r = 0; r < g.repetitions.size(); ++r)
        for (std::size_t c = 0; c < g.subjects.size(); ++c) g.trials[g.cell(r, c)] = j.at("trials").at(r).at(c).get<std::size_t>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw invalid_parameter(std::string("invalid grid document: ") + e.what());
  }
}

inline LikelihoodGrid read_grid(const std::string& path) {
  auto in = detail::open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path + ": " + e.what(), 0);
  }
  return grid_from_json(j);
}

}  // namespace fowr::io
