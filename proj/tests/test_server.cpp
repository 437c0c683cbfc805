#include <gtest/gtest.h>

#include <filesystem>
#include <set>
#include <sstream>
#include <thread>

#include <fowr/io.hpp>
#include <fowr/observer_model.hpp>
#include <fowr/server.hpp>

using namespace fowr;
using json = nlohmann::json;

namespace {

io::ExperimentConfig five_stimuli() {
  io::ExperimentConfig c;
  c.name = "e2e";
  c.catalog = default_catalog(5);
  for (auto& s : c.catalog) s.media = "media/" + s.pvs_id + ".mp4";
  return c;
}

/// Session service on an ephemeral port for the lifetime of the fixture.
class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    log_ = std::filesystem::temp_directory_path() / ("fowr_server_" + std::to_string(::getpid()) + ".jsonl");
    std::filesystem::remove(log_);
    start();
  }

  void TearDown() override {
    stop();
    std::filesystem::remove(log_);
  }

  void start() {
    store_ = std::make_unique<SessionStore>(five_stimuli(), log_.string());
    server_ = std::make_unique<httplib::Server>();
    register_routes(*server_, *store_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void stop() {
    server_->stop();
    thread_.join();
    client_.reset();
    server_.reset();
    store_.reset();
  }

  std::pair<int, json> post(const std::string& path, const json& body) {
    auto res = client_->Post(path, body.dump(), "application/json");
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body)};
  }

  std::pair<int, json> get(const std::string& path) {
    auto res = client_->Get(path);
    if (!res) return {0, {}};
    return {res->status, json::parse(res->body)};
  }

  std::filesystem::path log_;
  std::unique_ptr<SessionStore> store_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(ServerTest, CompleteSessionResumeAndExport) {
  auto [code, cfg] = get("/api/config");
  EXPECT_EQ(code, 200);
  EXPECT_EQ(cfg["stimuli"], 5);

  auto [sc, session] = post("/api/sessions", {{"subject_id", "obs1"}, {"idempotency_token", "s1"}});
  ASSERT_EQ(sc, 201);
  const std::string id = session["session_id"];
  const std::string base = "/api/sessions/" + id;
  std::vector<std::string> seen;

  for (int k = 0; k < 5; ++k) {
    if (k == 2) {
      // reload mid-session: a fresh server over the same event log resumes at the cursor
      stop();
      start();
    }
    auto [nc, next] = get(base + "/next");
    ASSERT_EQ(nc, 200);
    ASSERT_FALSE(next["done"].get<bool>());
    EXPECT_EQ(next["position"], k);
    EXPECT_EQ(next["media"], "media/" + next["pvs_id"].get<std::string>() + ".mp4");
    seen.push_back(next["pvs_id"]);
    const json vote{{"pvs_id", next["pvs_id"]}, {"vote", 1 + k}, {"idempotency_token", "v" + std::to_string(k)}};
    EXPECT_EQ(post(base + "/votes", vote).first, 200);
    // a double click resends the same token: acknowledged, recorded once
    auto [again, state] = post(base + "/votes", vote);
    EXPECT_EQ(again, 200);
    EXPECT_EQ(state["cursor"], k + 1);
  }
  EXPECT_EQ(std::set<std::string>(seen.begin(), seen.end()).size(), 5u);
  EXPECT_TRUE(get(base + "/next").second["done"].get<bool>());

  auto [qc, done] = post(base + "/questionnaire",
                         {{"confidence", 4}, {"focus", 5}, {"tiredness", 2}, {"idempotency_token", "q"}});
  EXPECT_EQ(qc, 200);
  EXPECT_EQ(done["status"], "complete");

  auto res = client_->Get("/api/export");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  std::istringstream csv(res->body);
  const auto ds = io::read_ratings(csv);
  ASSERT_EQ(ds.records().size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto j = *ds.stimulus_index(seen[k]);
    EXPECT_EQ(ds.vote(0, 1, j), static_cast<int>(k + 1));
  }
  EXPECT_EQ(store_->questionnaires().size(), 1u);
}

TEST_F(ServerTest, RejectsDoubleSubmissionWithoutToken) {
  auto [sc, session] = post("/api/sessions", {{"subject_id", "obs2"}, {"idempotency_token", "a"}});
  const std::string base = "/api/sessions/" + session["session_id"].get<std::string>();
  const auto pvs = get(base + "/next").second["pvs_id"];
  EXPECT_EQ(post(base + "/votes", {{"pvs_id", pvs}, {"vote", 3}, {"idempotency_token", "x1"}}).first, 200);
  auto [code, err] = post(base + "/votes", {{"pvs_id", pvs}, {"vote", 3}, {"idempotency_token", "x2"}});
  EXPECT_EQ(code, 409);
  EXPECT_EQ(err["code"], "duplicate");
}

TEST_F(ServerTest, ErrorStatuses) {
  EXPECT_EQ(get("/api/sessions/sess-000404").first, 404);
  EXPECT_EQ(post("/api/sessions", {{"subject_id", "z"}}).first, 400);  // no token
  auto res = client_->Post("/api/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(post("/api/sessions", {{"idempotency_token", "t"}}).first, 400);  // no subject
  auto [sc, session] = post("/api/sessions", {{"subject_id", "z"}, {"idempotency_token", "t2"}});
  const std::string base = "/api/sessions/" + session["session_id"].get<std::string>();
  const auto pvs = get(base + "/next").second["pvs_id"];
  EXPECT_EQ(post(base + "/votes", {{"pvs_id", pvs}, {"vote", 9}, {"idempotency_token", "b"}}).first, 422);
  EXPECT_EQ(post(base + "/votes", {{"pvs_id", pvs}, {"vote", 4}, {"idempotency_token", "b2"}}).first, 200);
  EXPECT_EQ(post(base + "/questionnaire", {{"confidence", 3}, {"focus", 3}, {"tiredness", 3}, {"idempotency_token", "c"}}).first,
            409);
  EXPECT_EQ(post(base + "/reliability", {{"reliability_index", 97}, {"idempotency_token", "d"}}).first, 200);
  EXPECT_EQ(post(base + "/abandon", {{"idempotency_token", "e"}}).first, 200);
  EXPECT_EQ(post(base + "/votes", {{"pvs_id", pvs}, {"vote", 3}, {"idempotency_token", "f"}}).first, 409);
  auto exported = client_->Get("/api/export?include_abandoned=1");
  ASSERT_TRUE(exported);
  EXPECT_NE(exported->body.find("97"), std::string::npos);
}
