#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "error.hpp"
#include "estimators.hpp"
#include "io.hpp"
#include "random.hpp"

namespace fowr {

enum class SessionStatus { open, complete, abandoned };

inline const char* to_string(SessionStatus s) {
  return s == SessionStatus::open ? "open" : s == SessionStatus::complete ? "complete" : "abandoned";
}

struct SessionState {
  std::string session_id;
  std::string subject_id;
  int repetition = 1;
  std::uint64_t seed = 0;
  std::vector<std::size_t> order;  // catalog indices in presentation order
  std::vector<int> votes;          // by presentation position; 0 = not yet voted
  std::size_t cursor = 0;          // next unrated position
  std::optional<int> reliability_index;
  std::optional<QuestionnaireResponse> questionnaire;
  SessionStatus status = SessionStatus::open;
  std::string date;                // YYYY-MM-DD at session start
  bool same_day_warning = false;

  bool all_voted() const noexcept { return cursor == order.size(); }
};

/// Current UTC calendar date.
inline std::string utc_today() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[11];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

/// Live collection sessions for one experiment. Every accepted mutation is
/// appended to an event log (JSON lines) and flushed to disk before it is
/// acknowledged; constructing a store over an existing log replays it.
/// All operations are serialized by one mutex.
class SessionStore {
 public:
  using clock_fn = std::function<std::string()>;

  explicit SessionStore(io::ExperimentConfig config, std::string log_path = {}, clock_fn today = utc_today)
      : config_(std::move(config)), log_path_(std::move(log_path)), today_(std::move(today)) {
    config_.validate();
    if (!log_path_.empty()) {
      replay();
      log_ = std::fopen(log_path_.c_str(), "ab");
      if (!log_) throw error("cannot open event log '" + log_path_ + "'");
    }
  }

  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  ~SessionStore() {
    if (log_) std::fclose(log_);
  }

  const io::ExperimentConfig& config() const noexcept { return config_; }

  SessionState start_session(const std::string& subject_id, const std::string& token = {}) {
    std::lock_guard lock(mutex_);
    if (auto s = replayed_token(token, "start", "")) return *s;
    if (subject_id.empty()) throw session_error(session_error::kind::invalid, "subject id is empty");
    const auto ev = nlohmann::json{{"type", "start"},
                                   {"subject", subject_id},
                                   {"date", today_()},
                                   {"token", token}};
    return apply(ev, true);
  }

  SessionState get(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return find(session_id);
  }

  /// Stimulus at the cursor, or nothing once every stimulus is voted.
  std::optional<Stimulus> next_stimulus(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    const auto& s = find(session_id);
    if (s.status != SessionStatus::open || s.all_voted()) return std::nullopt;
    return config_.catalog[s.order[s.cursor]];
  }

  SessionState submit_vote(const std::string& session_id, const std::string& pvs_id, int vote,
                           const std::string& token = {}) {
    std::lock_guard lock(mutex_);
    if (auto s = replayed_token(token, "vote", session_id)) return *s;
    return apply({{"type", "vote"}, {"session", session_id}, {"pvs_id", pvs_id}, {"vote", vote}, {"token", token}},
                 true);
  }

  SessionState submit_questionnaire(const std::string& session_id, const QuestionnaireResponse& r,
                                    const std::string& token = {}) {
    std::lock_guard lock(mutex_);
    if (auto s = replayed_token(token, "questionnaire", session_id)) return *s;
    return apply({{"type", "questionnaire"},
                  {"session", session_id},
                  {"confidence", r.confidence},
                  {"focus", r.focus},
                  {"tiredness", r.tiredness},
                  {"token", token}},
                 true);
  }

  SessionState post_reliability(const std::string& session_id, int index, const std::string& token = {}) {
    std::lock_guard lock(mutex_);
    if (auto s = replayed_token(token, "reliability", session_id)) return *s;
    return apply({{"type", "reliability"}, {"session", session_id}, {"index", index}, {"token", token}}, true);
  }

  SessionState abandon(const std::string& session_id, const std::string& token = {}) {
    std::lock_guard lock(mutex_);
    if (auto s = replayed_token(token, "abandon", session_id)) return *s;
    return apply({{"type", "abandon"}, {"session", session_id}, {"token", token}}, true);
  }

  std::vector<SessionState> sessions() const {
    std::lock_guard lock(mutex_);
    std::vector<SessionState> out;
    for (const auto& id : creation_order_) out.push_back(sessions_.at(id));
    return out;
  }

  /// Votes of completed sessions (and, when asked, of abandoned ones whose
  /// repetition number was not later completed) as a rating dataset.
  RatingDataset export_dataset(bool include_abandoned = false) const {
    std::lock_guard lock(mutex_);
    std::map<std::pair<std::string, int>, const SessionState*> chosen;
    for (const auto& id : creation_order_) {
      const auto& s = sessions_.at(id);
      if (s.status == SessionStatus::open) continue;
      if (s.status == SessionStatus::abandoned && !include_abandoned) continue;
      auto& slot = chosen[{s.subject_id, s.repetition}];
      if (!slot || slot->status != SessionStatus::complete) slot = &s;
    }
    std::vector<RatingRecord> records;
    for (const auto& [key, s] : chosen)
      for (std::size_t k = 0; k < s->order.size(); ++k) {
        if (!s->votes[k]) continue;
        const auto& stim = config_.catalog[s->order[k]];
        records.push_back({s->subject_id, stim.pvs_id, s->repetition, AcrVote{s->votes[k]}, config_.lab,
                           stim.content_group, stim.src_id, s->date, s->reliability_index});
      }
    return RatingDataset(std::move(records), config_.catalog, RatingDataset::repetition_check::relaxed);
  }

  void export_ratings(std::ostream& out, bool include_abandoned = false) const {
    io::write_ratings(export_dataset(include_abandoned), out);
  }

  std::vector<QuestionnaireRecord> questionnaires() const {
    std::lock_guard lock(mutex_);
    std::vector<QuestionnaireRecord> out;
    for (const auto& id : creation_order_) {
      const auto& s = sessions_.at(id);
      if (s.status == SessionStatus::complete && s.questionnaire)
        out.push_back({s.subject_id, s.repetition, *s.questionnaire});
    }
    return out;
  }

  /// Derived state snapshot (not needed for recovery; the log is authoritative).
  nlohmann::json snapshot() const {
    std::lock_guard lock(mutex_);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& id : creation_order_) j.push_back(to_json(sessions_.at(id)));
    return {{"experiment", config_.name}, {"sessions", j}};
  }

  nlohmann::json to_json(const SessionState& s) const {
    nlohmann::json order = nlohmann::json::array();
    for (std::size_t k : s.order) order.push_back(config_.catalog[k].pvs_id);
    nlohmann::json j{{"session_id", s.session_id},
                     {"subject_id", s.subject_id},
                     {"repetition", s.repetition},
                     {"seed", s.seed},
                     {"order", order},
                     {"votes", s.votes},
                     {"cursor", s.cursor},
                     {"total", s.order.size()},
                     {"status", to_string(s.status)},
                     {"date", s.date},
                     {"same_day_warning", s.same_day_warning},
                     {"questionnaire_required", config_.questionnaire_enabled},
                     {"reliability_index", s.reliability_index ? nlohmann::json(*s.reliability_index) : nlohmann::json()}};
    if (s.questionnaire)
      j["questionnaire"] = {{"confidence", s.questionnaire->confidence},
                            {"focus", s.questionnaire->focus},
                            {"tiredness", s.questionnaire->tiredness}};
    return j;
  }

 private:
  using kind = session_error::kind;

  const SessionState& find(const std::string& id) const {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw session_error(kind::not_found, "unknown session '" + id + "'");
    return it->second;
  }
  SessionState& find_mut(const std::string& id) { return const_cast<SessionState&>(find(id)); }

  SessionState& require_open(const std::string& id) {
    auto& s = find_mut(id);
    if (s.status != SessionStatus::open)
      throw session_error(kind::closed, "session '" + id + "' is " + to_string(s.status));
    return s;
  }

  /// A token seen before returns the current state of its session when the
  /// operation matches, and is a conflict otherwise.
  std::optional<SessionState> replayed_token(const std::string& token, const std::string& type,
                                             const std::string& session_id) const {
    if (token.empty()) return std::nullopt;
    auto it = tokens_.find(token);
    if (it == tokens_.end()) return std::nullopt;
    const auto& [seen_type, seen_session] = it->second;
    if (seen_type != type || (!session_id.empty() && seen_session != session_id))
      throw session_error(kind::conflict, "idempotency token '" + token + "' was used for another request");
    return find(seen_session);
  }

  /// Validates and applies one event; `fresh` events are logged first.
  SessionState apply(const nlohmann::json& ev, bool fresh) {
    const std::string type = ev.at("type");
    const std::string token = ev.value("token", "");
    SessionState* target = nullptr;
    nlohmann::json logged = ev;

    if (type == "start") {
      const std::string subject = ev.at("subject");
      int completed = 0;
      bool same_day = false;
      for (const auto& id : creation_order_) {
        const auto& s = sessions_.at(id);
        if (s.subject_id != subject) continue;
        if (s.status == SessionStatus::open)
          throw session_error(kind::conflict, "subject '" + subject + "' already has open session '" + id + "'");
        if (s.status == SessionStatus::complete) {
          ++completed;
          same_day = same_day || s.date == ev.at("date").get<std::string>();
        }
      }
      SessionState s;
      const std::size_t seq = creation_order_.size() + 1;
      s.session_id = "sess-" + std::string(6 - std::min<std::size_t>(6, std::to_string(seq).size()), '0') +
                     std::to_string(seq);
      s.subject_id = subject;
      s.repetition = completed + 1;
      s.date = ev.at("date");
      s.same_day_warning = same_day;
      s.seed = ev.contains("seed") ? ev.at("seed").get<std::uint64_t>()
                                   : substream_seed(config_.seed, fnv1a(subject + "#" + std::to_string(seq)));
      rng_t rng{s.seed};
      s.order = random_permutation(rng, config_.catalog.size());
      s.votes.assign(s.order.size(), 0);
      logged["seed"] = s.seed;
      logged["session"] = s.session_id;
      if (fresh) log(logged);
      creation_order_.push_back(s.session_id);
      target = &(sessions_[s.session_id] = std::move(s));
    } else if (type == "vote") {
      auto& s = require_open(ev.at("session"));
      const std::string pvs = ev.at("pvs_id");
      const int vote = ev.at("vote");
      std::optional<std::size_t> pos;
      for (std::size_t k = 0; k < s.order.size(); ++k)
        if (config_.catalog[s.order[k]].pvs_id == pvs) pos = k;
      if (!pos) throw session_error(kind::invalid, "stimulus '" + pvs + "' is not in the catalog");
      if (s.votes[*pos]) throw session_error(kind::duplicate, "stimulus '" + pvs + "' already has a vote in this session");
      if (*pos != s.cursor)
        throw session_error(kind::out_of_order, "expected a vote for '" + config_.catalog[s.order[s.cursor]].pvs_id +
                                                    "', got '" + pvs + "'");
      if (!AcrVote::valid(vote)) throw session_error(kind::invalid, "vote " + std::to_string(vote) + " outside 1..5");
      if (fresh) log(logged);
      s.votes[s.cursor++] = vote;
      if (s.all_voted() && !config_.questionnaire_enabled) s.status = SessionStatus::complete;
      target = &s;
    } else if (type == "questionnaire") {
      auto& s = require_open(ev.at("session"));
      if (!config_.questionnaire_enabled) throw session_error(kind::invalid, "questionnaire is disabled");
      if (!s.all_voted())
        throw session_error(kind::premature, "questionnaire submitted with " + std::to_string(s.order.size() - s.cursor) +
                                                 " stimuli left");
      QuestionnaireResponse r{ev.at("confidence"), ev.at("focus"), ev.at("tiredness")};
      if (!r.valid()) throw session_error(kind::invalid, "questionnaire answers must lie in 1..5");
      if (fresh) log(logged);
      s.questionnaire = r;
      s.status = SessionStatus::complete;
      target = &s;
    } else if (type == "reliability") {
      auto& s = require_open(ev.at("session"));
      const int idx = ev.at("index");
      if (idx < 0 || idx > 100) throw session_error(kind::invalid, "reliability index outside 0..100");
      if (s.reliability_index) throw session_error(kind::duplicate, "reliability index already posted");
      if (fresh) log(logged);
      s.reliability_index = idx;
      target = &s;
    } else if (type == "abandon") {
      auto& s = require_open(ev.at("session"));
      if (fresh) log(logged);
      s.status = SessionStatus::abandoned;
      target = &s;
    } else {
      throw error("unknown event type '" + type + "' in event log");
    }
    if (!token.empty()) tokens_[token] = {type, target->session_id};
    return *target;
  }

  void log(const nlohmann::json& ev) {
    if (!log_) return;
    const std::string line = ev.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), log_) != line.size() || std::fflush(log_) != 0)
      throw error("failed to append to event log '" + log_path_ + "'");
    ::fsync(fileno(log_));
  }

  void replay() {
    std::ifstream in(log_path_);
    if (!in) return;  // a new log
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      nlohmann::json ev;
      try {
        ev = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw parse_error("corrupt event log entry: " + std::string(e.what()), n);
      }
      apply(ev, false);
    }
  }

  io::ExperimentConfig config_;
  std::string log_path_;
  clock_fn today_;
  std::FILE* log_ = nullptr;
  mutable std::mutex mutex_;
  std::map<std::string, SessionState> sessions_;
  std::vector<std::string> creation_order_;
  std::map<std::string, std::pair<std::string, std::string>> tokens_;  // token -> (type, session)
};

}  // namespace fowr
