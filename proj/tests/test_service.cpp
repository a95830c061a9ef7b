#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "objrec/error.hpp"
#include "objrec/service.hpp"
#include "objrec/stats.hpp"
#include "support.hpp"

using namespace objrec;
using namespace objrec::service;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::filesystem::create_directories(tmp / "pool");
    objrec::testing::file_pool(tmp / "pool", 82);
  }

  objrec::testing::TempDir tmp;
};

CreateRequest small(std::string observer, ExperimentKind kind, int practice = 4) {
  return {.observer = std::move(observer), .experiment = kind, .seed = 3, .practice_trials = practice,
          .images_per_category = 16};
}

/// Answers every remaining trial: `na` on every fifth index, cat or dog otherwise.
void answer_all(SessionService& svc, const std::string& id) {
  for (;;) {
    const auto next = svc.next_trial(id);
    if (next.finished) return;
    Submission sub{.trial_index = next.trial_index};
    if (next.trial_index % 5 != 0) {
      sub.response = next.trial_index % 2 == 0 ? Category::Cat : Category::Dog;
      sub.rt_ms = 500.0 + next.trial_index;
    }
    svc.submit_response(id, sub);
  }
}

}  // namespace

TEST(Config, TimingSumsTo2200) {
  EXPECT_EQ(Timing{}.total_ms(), 2200);
  EXPECT_DOUBLE_EQ(kBackgroundGray, 0.454);
}

TEST_F(ServiceTest, ColourSessionHas1280MainTrials) {
  SessionService svc(tmp.path());
  const auto created = svc.create_session({.observer = "subject-01", .experiment = ExperimentKind::Colour,
                                           .seed = 1});
  EXPECT_EQ(created.config.main_trials, 1280);
  EXPECT_EQ(created.config.practice_trials, 32);
  EXPECT_EQ(created.config.break_every, 256);
  EXPECT_EQ(created.config.timing.total_ms(), 2200);
  ASSERT_EQ(created.config.category_order.size(), 16u);
  EXPECT_EQ(created.config.category_order.front(), "knife");
  EXPECT_EQ(svc.state(created.id), SessionState::Practice);
}

TEST_F(ServiceTest, ContrastBreaksEvery128) {
  SessionService svc(tmp.path());
  const auto created = svc.create_session(small("subject-02", ExperimentKind::Contrast));
  EXPECT_EQ(created.config.break_every, 128);
  EXPECT_EQ(created.config.main_trials, 256);
}

TEST_F(ServiceTest, TrialFlowPracticeFeedbackAndDuplicates) {
  SessionService svc(tmp.path());
  const auto id = svc.create_session(small("subject-03", ExperimentKind::Noise)).id;
  const auto first = svc.next_trial(id);
  EXPECT_EQ(first.trial_index, 0);
  EXPECT_TRUE(first.is_practice);
  EXPECT_EQ(svc.next_trial(id).stimulus_url, first.stimulus_url);
  EXPECT_TRUE(svc.stimulus_file(first.stimulus_url.substr(first.stimulus_url.rfind('/') + 1)));
  EXPECT_TRUE(svc.stimulus_file(first.mask_url.substr(first.mask_url.rfind('/') + 1)));

  const auto ack = svc.submit_response(id, {.trial_index = 0, .response = std::nullopt});
  EXPECT_EQ(ack.cursor, 1);
  ASSERT_TRUE(ack.true_category.has_value());
  EXPECT_EQ(*ack.true_category, svc.records(id).at(0).category);
  EXPECT_FALSE(svc.records(id).at(0).response.has_value());

  const auto log = tmp / "logs" / (id + ".csv");
  const std::string before = slurp(log);
  EXPECT_EQ(kind_of([&] { svc.submit_response(id, {.trial_index = 0, .response = Category::Cat}); }),
            ErrorKind::StaleTrial);
  EXPECT_EQ(kind_of([&] { svc.submit_response(id, {.trial_index = 5, .response = Category::Cat}); }),
            ErrorKind::StaleTrial);
  EXPECT_EQ(slurp(log), before);

  for (int i = 1; i < 4; ++i) svc.submit_response(id, {.trial_index = i, .response = Category::Cat});
  const auto main = svc.next_trial(id);
  EXPECT_FALSE(main.is_practice);
  EXPECT_NE(main.mask_url, first.mask_url);
  EXPECT_FALSE(svc.submit_response(id, {.trial_index = 4, .response = Category::Cat}).true_category);
  EXPECT_EQ(svc.state(id), SessionState::Running);
}

TEST_F(ServiceTest, BreakInfoReportsLastBlockAccuracy) {
  SessionService svc(tmp.path());
  const auto id = svc.create_session(small("subject-04", ExperimentKind::Contrast, 0)).id;
  for (int i = 0; i < 128; ++i) {
    EXPECT_FALSE(svc.next_trial(id).break_info.has_value());
    svc.submit_response(id, {.trial_index = i});
  }
  const auto at_break = svc.next_trial(id);
  ASSERT_TRUE(at_break.break_info.has_value());
  EXPECT_EQ(at_break.break_info->block, 1);
  EXPECT_EQ(at_break.break_info->block_trials, 128);
  EXPECT_EQ(at_break.break_info->last_block_accuracy, 0.0);
  EXPECT_EQ(svc.state(id), SessionState::Break);
}

TEST_F(ServiceTest, BreakAccuracyCountsCorrectAnswers) {
  SessionService svc(tmp.path());
  const auto id = svc.create_session(small("subject-05", ExperimentKind::Contrast, 0)).id;
  for (int i = 0; i < 128; ++i) {
    svc.next_trial(id);
    svc.submit_response(id, {.trial_index = i, .response = Category::Cat});
  }
  const auto recs = svc.records(id);
  const auto info = svc.next_trial(id).break_info;
  ASSERT_TRUE(info);
  EXPECT_DOUBLE_EQ(info->last_block_accuracy, stats::accuracy(recs));
  EXPECT_GT(info->last_block_accuracy, 0.0);
  EXPECT_LT(info->last_block_accuracy, 1.0);
}

TEST_F(ServiceTest, EndOfSessionAndNewSessionAllowed) {
  SessionService svc(tmp.path());
  const auto id = svc.create_session(small("subject-06", ExperimentKind::Colour)).id;
  EXPECT_EQ(kind_of([&] { svc.create_session(small("subject-06", ExperimentKind::Noise)); }),
            ErrorKind::Conflict);
  answer_all(svc, id);
  EXPECT_TRUE(svc.next_trial(id).finished);
  EXPECT_EQ(svc.state(id), SessionState::Finished);
  EXPECT_EQ(kind_of([&] { svc.submit_response(id, {.trial_index = 260}); }), ErrorKind::StaleTrial);
  EXPECT_EQ(svc.records(id).size(), 260u);
  auto again = small("subject-06", ExperimentKind::Noise);
  EXPECT_NO_THROW(svc.create_session(again));
  EXPECT_EQ(kind_of([&] { svc.next_trial("ffff"); }), ErrorKind::NotFound);
}

TEST_F(ServiceTest, CrashRestartReplaysLogExactly) {
  std::string id;
  std::vector<TrialRecord> before;
  {
    SessionService svc(tmp.path());
    id = svc.create_session(small("subject-07", ExperimentKind::Noise)).id;
    for (int i = 0; i < 37; ++i) {
      svc.next_trial(id);
      svc.submit_response(id, {.trial_index = i, .response = i % 3 ? Response(Category::Boat) : std::nullopt,
                               .rt_ms = 400.5, .onset_ms = 10.0 * i, .click_ms = 10.0 * i + 400.5});
    }
    before = svc.records(id);
  }
  const auto log = tmp / "logs" / (id + ".csv");
  std::ofstream(log, std::ios::app) << "subject-07,1,0,37,torn";

  SessionService svc(tmp.path());
  EXPECT_EQ(svc.cursor(id), 37);
  EXPECT_EQ(svc.records(id), before);
  EXPECT_EQ(svc.next_trial(id).trial_index, 37);
  EXPECT_EQ(svc.session_ids(), std::vector<std::string>{id});

  const auto ingested = ingest_trials(log);
  EXPECT_EQ(ingested, before);
}

TEST_F(ServiceTest, RecoveryRejectsTamperedLog) {
  std::string id;
  {
    SessionService svc(tmp.path());
    id = svc.create_session(small("subject-08", ExperimentKind::Colour)).id;
    for (int i = 0; i < 3; ++i) {
      svc.next_trial(id);
      svc.submit_response(id, {.trial_index = i, .response = Category::Cat});
    }
  }
  const auto log = tmp / "logs" / (id + ".csv");
  auto recs = ingest_trials(log);
  recs[1].image_id = "someone_else";
  std::ofstream(log, std::ios::trunc) << trials_to_csv(recs);
  EXPECT_EQ(kind_of([&] { SessionService again(tmp.path()); }), ErrorKind::Conflict);
}

TEST_F(ServiceTest, StimulusNamesAreConfined) {
  SessionService svc(tmp.path());
  EXPECT_FALSE(svc.stimulus_file("../pool/manifest.csv"));
  EXPECT_FALSE(svc.stimulus_file("a/b.png"));
  EXPECT_FALSE(svc.stimulus_file("missing.png"));
}

TEST_F(ServiceTest, HttpEndToEnd) {
  SessionService svc(tmp.path());
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread thread([&] { server.run(); });

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions",
                             R"({"observer": "subject-09", "experiment": "contrast", "seed": 4,
                                 "practice_trials": 2, "images_per_category": 16})",
                             "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const auto body = json::parse(created->body);
  const std::string id = body["session_id"];
  EXPECT_EQ(body["config"]["timing"]["total_ms"], 2200);
  EXPECT_EQ(body["config"]["break_every"], 128);
  EXPECT_EQ(body["config"]["total_trials"], 258);
  EXPECT_DOUBLE_EQ(body["config"]["background"].get<double>(), 0.454);

  auto dup = client.Post("/sessions", R"({"observer": "subject-09", "experiment": "noise"})",
                         "application/json");
  EXPECT_EQ(dup->status, 409);
  EXPECT_EQ(client.Post("/sessions", "{", "application/json")->status, 400);
  EXPECT_EQ(client.Post("/sessions", R"({"observer": "x", "experiment": "mystery"})",
                        "application/json")->status,
            400);

  auto next = client.Get("/sessions/" + id + "/trials/next");
  ASSERT_EQ(next->status, 200);
  const auto trial = json::parse(next->body);
  EXPECT_EQ(trial["trial_index"], 0);
  EXPECT_EQ(trial["is_practice"], true);
  EXPECT_TRUE(trial["break_info"].is_null());

  auto image = client.Get(trial["stimulus_url"].get<std::string>());
  ASSERT_EQ(image->status, 200);
  EXPECT_EQ(image->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(image->body.substr(1, 3), "PNG");
  EXPECT_EQ(client.Get(trial["mask_url"].get<std::string>())->status, 200);
  EXPECT_EQ(client.Get("/stimuli/nothing.png")->status, 404);

  auto ack = client.Post("/sessions/" + id + "/responses",
                         R"({"trial_index": 0, "response": "na", "rt_ms": null, "onset_ms": 5.5})",
                         "application/json");
  ASSERT_EQ(ack->status, 200);
  const auto ack_body = json::parse(ack->body);
  EXPECT_EQ(ack_body["accepted"], true);
  EXPECT_EQ(ack_body["cursor"], 1);
  EXPECT_TRUE(ack_body.contains("true_category"));

  auto stale = client.Post("/sessions/" + id + "/responses", R"({"trial_index": 0, "response": "dog"})",
                           "application/json");
  EXPECT_EQ(stale->status, 409);
  EXPECT_EQ(json::parse(stale->body)["cursor"], 1);
  EXPECT_EQ(client.Post("/sessions/" + id + "/responses", R"({"trial_index": 1, "response": "zebra"})",
                        "application/json")->status,
            400);
  EXPECT_EQ(client.Get("/sessions/abc123/trials/next")->status, 404);

  client.Post("/sessions/" + id + "/responses", R"({"trial_index": 1, "response": "dog"})", "application/json");
  auto main_ack = client.Post("/sessions/" + id + "/responses", R"({"trial_index": 2, "response": "dog"})",
                              "application/json");
  EXPECT_FALSE(json::parse(main_ack->body).contains("true_category"));

  server.stop();
  thread.join();
  const auto recs = ingest_trials(tmp / "logs" / (id + ".csv"));
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_FALSE(recs[0].response.has_value());
  EXPECT_EQ(recs[0].onset_ms, 5.5);
  EXPECT_TRUE(recs[0].received_ms.has_value());
}
