#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>

#include <fowr/io.hpp>
#include <fowr/observer_model.hpp>
#include <fowr/session.hpp>

using namespace fowr;

namespace {

io::ExperimentConfig config(std::size_t n = 5, bool questionnaire = true) {
  io::ExperimentConfig c;
  c.name = "unit";
  c.catalog = default_catalog(n);
  c.questionnaire_enabled = questionnaire;
  c.seed = 21;
  c.lab = "home";
  return c;
}

struct TempLog {
  std::filesystem::path path;
  explicit TempLog(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
    std::filesystem::remove(path);
  }
  ~TempLog() { std::filesystem::remove(path); }
};

/// Votes every remaining stimulus with `vote` and completes the session.
void finish(SessionStore& store, const std::string& id, int vote = 3) {
  while (auto next = store.next_stimulus(id)) store.submit_vote(id, next->pvs_id, vote);
  if (store.config().questionnaire_enabled) store.submit_questionnaire(id, {4, 4, 2});
}

session_error::kind error_kind(const std::function<void()>& f) {
  try {
    f();
  } catch (const session_error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no session_error";
  return session_error::kind::invalid;
}

}  // namespace

TEST(Session, FullSessionProducesOneRecordPerStimulus) {
  SessionStore store(config());
  const auto s = store.start_session("alice");
  EXPECT_EQ(s.repetition, 1);
  EXPECT_EQ(s.order.size(), 5u);
  std::set<std::size_t> uniq(s.order.begin(), s.order.end());
  EXPECT_EQ(uniq.size(), 5u);
  finish(store, s.session_id, 4);
  EXPECT_EQ(store.get(s.session_id).status, SessionStatus::complete);
  const auto ds = store.export_dataset();
  EXPECT_EQ(ds.records().size(), 5u);
  for (const auto& r : ds.records()) {
    EXPECT_EQ(r.vote.value(), 4);
    EXPECT_EQ(r.lab, "home");
    EXPECT_TRUE(r.session_date);
  }
  ASSERT_EQ(store.questionnaires().size(), 1u);
  EXPECT_EQ(store.questionnaires()[0].response.tiredness, 2);
}

TEST(Session, OrdersDifferBetweenSessionsButAreReproducible) {
  SessionStore a(config(30)), b(config(30));
  const auto s1 = a.start_session("x");
  const auto t1 = b.start_session("x");
  EXPECT_EQ(s1.order, t1.order);
  finish(a, s1.session_id);
  const auto s2 = a.start_session("x");
  EXPECT_NE(s1.order, s2.order);
  EXPECT_EQ(s2.repetition, 2);
}

TEST(Session, VotesMustFollowThePresentationOrder) {
  SessionStore store(config());
  const auto s = store.start_session("bob");
  const auto& cat = store.config().catalog;
  const auto second = cat[s.order[1]].pvs_id;
  EXPECT_EQ(error_kind([&] { store.submit_vote(s.session_id, second, 3); }), session_error::kind::out_of_order);
  const auto first = cat[s.order[0]].pvs_id;
  store.submit_vote(s.session_id, first, 3);
  EXPECT_EQ(error_kind([&] { store.submit_vote(s.session_id, first, 2); }), session_error::kind::duplicate);
  EXPECT_EQ(error_kind([&] { store.submit_vote(s.session_id, second, 0); }), session_error::kind::invalid);
  EXPECT_EQ(error_kind([&] { store.submit_vote(s.session_id, "nope", 3); }), session_error::kind::invalid);
  EXPECT_EQ(error_kind([&] { store.submit_vote("sess-999999", first, 3); }), session_error::kind::not_found);
  EXPECT_EQ(store.get(s.session_id).cursor, 1u);
}

TEST(Session, IdempotencyTokensRecordOnce) {
  SessionStore store(config());
  const auto s = store.start_session("carol", "start-1");
  EXPECT_EQ(store.start_session("carol", "start-1").session_id, s.session_id);
  const auto pvs = store.config().catalog[s.order[0]].pvs_id;
  store.submit_vote(s.session_id, pvs, 5, "vote-1");
  const auto again = store.submit_vote(s.session_id, pvs, 5, "vote-1");
  EXPECT_EQ(again.cursor, 1u);
  EXPECT_EQ(error_kind([&] { store.abandon(s.session_id, "vote-1"); }), session_error::kind::conflict);
  EXPECT_EQ(store.sessions().size(), 1u);
}

TEST(Session, QuestionnaireGatesCompletion) {
  SessionStore store(config());
  const auto s = store.start_session("dan");
  EXPECT_EQ(error_kind([&] { store.submit_questionnaire(s.session_id, {3, 3, 3}); }), session_error::kind::premature);
  while (auto next = store.next_stimulus(s.session_id)) store.submit_vote(s.session_id, next->pvs_id, 2);
  EXPECT_EQ(store.get(s.session_id).status, SessionStatus::open);
  EXPECT_TRUE(store.export_dataset().empty());
  EXPECT_EQ(error_kind([&] { store.submit_questionnaire(s.session_id, {6, 3, 3}); }), session_error::kind::invalid);
  store.submit_questionnaire(s.session_id, {3, 3, 3});
  EXPECT_EQ(store.get(s.session_id).status, SessionStatus::complete);
  EXPECT_EQ(error_kind([&] { store.submit_questionnaire(s.session_id, {3, 3, 3}); }), session_error::kind::closed);
}

TEST(Session, WithoutQuestionnaireTheLastVoteCompletes) {
  SessionStore store(config(3, false));
  const auto s = store.start_session("eve");
  finish(store, s.session_id);
  EXPECT_EQ(store.get(s.session_id).status, SessionStatus::complete);
  EXPECT_EQ(error_kind([&] { store.submit_questionnaire(s.session_id, {3, 3, 3}); }), session_error::kind::closed);
}

TEST(Session, OneOpenSessionPerSubject) {
  SessionStore store(config());
  store.start_session("f");
  EXPECT_EQ(error_kind([&] { store.start_session("f"); }), session_error::kind::conflict);
  EXPECT_EQ(error_kind([&] { store.start_session(""); }), session_error::kind::invalid);
}

TEST(Session, SameDayRepetitionIsFlagged) {
  std::string today = "2024-03-01";
  SessionStore store(config(), {}, [&] { return today; });
  const auto a = store.start_session("g");
  EXPECT_FALSE(a.same_day_warning);
  finish(store, a.session_id);
  const auto b = store.start_session("g");
  EXPECT_TRUE(b.same_day_warning);
  finish(store, b.session_id);
  today = "2024-03-02";
  EXPECT_FALSE(store.start_session("g").same_day_warning);
}

TEST(Session, AbandonedSessionsAndRepetitionNumbers) {
  SessionStore store(config());
  const auto a = store.start_session("h");
  store.submit_vote(a.session_id, store.config().catalog[a.order[0]].pvs_id, 4);
  store.abandon(a.session_id);
  EXPECT_EQ(error_kind([&] { store.abandon(a.session_id); }), session_error::kind::closed);
  EXPECT_TRUE(store.export_dataset().empty());
  EXPECT_EQ(store.export_dataset(true).records().size(), 1u);
  // the abandoned repetition is retried under the same number
  const auto b = store.start_session("h");
  EXPECT_EQ(b.repetition, 1);
  finish(store, b.session_id, 2);
  const auto ds = store.export_dataset(true);
  EXPECT_EQ(ds.records().size(), 5u);
  for (const auto& r : ds.records()) EXPECT_EQ(r.vote.value(), 2);
}

TEST(Session, ReliabilityIndexIsExported) {
  SessionStore store(config());
  const auto s = store.start_session("i");
  store.post_reliability(s.session_id, 93);
  EXPECT_EQ(error_kind([&] { store.post_reliability(s.session_id, 94); }), session_error::kind::duplicate);
  EXPECT_EQ(error_kind([&] { store.post_reliability("nope", 94); }), session_error::kind::not_found);
  finish(store, s.session_id);
  for (const auto& r : store.export_dataset().records()) EXPECT_EQ(r.reliability_index, 93);
}

TEST(Session, ReplayReconstructsTheState) {
  TempLog log("fowr_session_replay.jsonl");
  std::string today = "2024-01-01";
  nlohmann::json before;
  std::string open_id;
  {
    SessionStore store(config(), log.path.string(), [&] { return today; });
    const auto a = store.start_session("j", "t0");
    finish(store, a.session_id, 5);
    today = "2024-01-02";
    const auto b = store.start_session("j");
    store.submit_vote(b.session_id, store.config().catalog[b.order[0]].pvs_id, 1, "t1");
    store.post_reliability(b.session_id, 99);
    const auto c = store.start_session("k");
    store.abandon(c.session_id);
    open_id = b.session_id;
    before = store.snapshot();
  }
  SessionStore replayed(config(), log.path.string(), [&] { return today; });
  EXPECT_EQ(replayed.snapshot(), before);
  // resumes at the cursor and keeps honoring old tokens
  EXPECT_EQ(replayed.get(open_id).cursor, 1u);
  EXPECT_EQ(replayed.submit_vote(open_id, "ignored", 1, "t1").cursor, 1u);
  finish(replayed, open_id, 4);
  EXPECT_EQ(replayed.export_dataset().records().size(), 10u);
}

TEST(Session, CorruptLogIsReported) {
  TempLog log("fowr_session_corrupt.jsonl");
  {
    std::ofstream f(log.path);
    f << "{\"type\":\"start\",\"subject\":\"a\",\"date\":\"2024-01-01\",\"token\":\"\"}\nnot json\n";
  }
  EXPECT_THROW(SessionStore(config(), log.path.string()), parse_error);
}

TEST(Session, ExportRoundTripsThroughTheRatingFormat) {
  SessionStore store(config(8));
  for (const char* who : {"m", "n"})
    for (int rep = 0; rep < 2; ++rep) finish(store, store.start_session(who).session_id, rep + 2);
  std::stringstream csv;
  store.export_ratings(csv);
  const auto back = io::read_ratings(csv);
  EXPECT_EQ(back, store.export_dataset());
  EXPECT_EQ(back.records().size(), 32u);
  EXPECT_EQ(back.repetitions(0), 2);
}
