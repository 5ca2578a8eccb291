#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "support/fixtures.hpp"
#include "support/frontends.hpp"
#include "termgraph/error.hpp"
#include "termgraph/service/http_server.hpp"
#include "termgraph/service/jobs.hpp"
#include "termgraph/service/settings.hpp"

namespace termgraph::service {
namespace {

using nlohmann::json;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Settings, ParsesAndRejectsUnknownKeys) {
  auto s = parse_settings(R"({"store":"x.db","provider":{"kind":"http","base_url":"http://h"},
                              "pricing":{"prompt_token":"0.000001"},"budget":"2.50","port":9000})");
  EXPECT_EQ(s.store_path, "x.db");
  EXPECT_EQ(s.provider.kind, "http");
  EXPECT_EQ(s.pricing.per_prompt_token, llm::Money::parse("0.000001"));
  EXPECT_EQ(s.budget, llm::Money::parse("2.5"));
  EXPECT_EQ(s.port, 9000);
  EXPECT_THROW(parse_settings(R"({"stroe":"x.db"})"), Error);
  EXPECT_THROW(parse_settings(R"({"provider":{"kin":"http"}})"), Error);
  EXPECT_THROW(parse_settings(R"({"budget":"lots"})"), Error);
  EXPECT_THROW(load_settings("/nonexistent/settings.json"), Error);
}

TEST(Settings, EnvironmentOverrides) {
  std::map<std::string, std::string> env{{"TERMGRAPH_STORE", "env.db"},
                                         {"TERMGRAPH_PROVIDER", "replay"},
                                         {"TERMGRAPH_TRANSCRIPT", "t.jsonl"},
                                         {"TERMGRAPH_PRICE_COMPLETION", "0.00002"},
                                         {"TERMGRAPH_BUDGET", ""},
                                         {"TERMGRAPH_PORT", "1234"}};
  auto lookup = [&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  };
  Settings s;
  s.budget = llm::Money::parse("1");
  apply_env_overrides(s, lookup);
  EXPECT_EQ(s.store_path, "env.db");
  EXPECT_EQ(s.provider.transcript, "t.jsonl");
  EXPECT_EQ(s.pricing.per_completion_token, llm::Money::parse("0.00002"));
  EXPECT_FALSE(s.budget);
  EXPECT_EQ(s.port, 1234);
  env["TERMGRAPH_PORT"] = "not-a-port";
  EXPECT_THROW(apply_env_overrides(s, lookup), Error);
}

TEST(Jobs, RunsDeduplicatesAndRecordsFailures) {
  store::Store st(":memory:");
  JobManager jobs(st, 2);
  auto ok = jobs.submit(kJobCodeSet, std::string("key-1"), "{}", [](JobContext& ctx) {
    ctx.progress(2, 4);
    ctx.progress(1, 4);  // ignored
    return JobOutcome{store::JobStatus::kSucceeded, "/code-sets/1", ""};
  });
  auto again = jobs.submit(kJobCodeSet, std::string("key-1"), "{}", [](JobContext&) -> JobOutcome {
    ADD_FAILURE() << "deduplicated task ran";
    return {};
  });
  EXPECT_TRUE(again.deduplicated);
  EXPECT_EQ(again.job.id, ok.job.id);
  auto done = jobs.wait(ok.job.id, 5s);
  EXPECT_EQ(done.status, store::JobStatus::kSucceeded);
  EXPECT_EQ(done.result_ref, "/code-sets/1");
  EXPECT_EQ(done.done, 4);
  EXPECT_EQ(done.total, 4);

  auto bad = jobs.submit(kJobCustomTable, std::nullopt, "{}", [](JobContext&) -> JobOutcome {
    throw QueryError("bad token", 7);
  });
  auto failed = jobs.wait(bad.job.id, 5s);
  EXPECT_EQ(failed.status, store::JobStatus::kFailed);
  EXPECT_EQ(failed.error.rfind("QueryError: ", 0), 0u) << failed.error;
  EXPECT_TRUE(is_terminal(failed.status));
  EXPECT_FALSE(is_terminal(store::JobStatus::kRunning));
}

TEST(Http, StatusForErrorCodes) {
  EXPECT_EQ(http_status_for(ErrorCode::kNotFound), 404);
  EXPECT_EQ(http_status_for(ErrorCode::kRunClosed), 409);
  EXPECT_EQ(http_status_for(ErrorCode::kEmptySet), 409);
  EXPECT_EQ(http_status_for(ErrorCode::kQueryError), 400);
  EXPECT_EQ(http_status_for(ErrorCode::kInvalidArgument), 400);
  EXPECT_EQ(http_status_for(ErrorCode::kStorageError), 500);
}

class HttpTest : public ::testing::Test {
 protected:
  testing::DemoFiles files = testing::make_demo(testing::temp_dir("http"));
  Workspace ws{testing::demo_settings(files, ":memory:")};
  JobManager jobs{ws.store()};
  HttpServer server{ws, jobs};
  int port = 0;
  std::thread serving;
  std::unique_ptr<httplib::Client> client;

  void SetUp() override {
    port = server.bind("127.0.0.1", 0);
    serving = std::thread([this] { server.listen(); });
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    for (int i = 0; i < 200 && !server.is_running(); ++i) std::this_thread::sleep_for(5ms);
  }
  void TearDown() override {
    server.stop();
    serving.join();
  }
  json wait_job(const httplib::Result& res) {
    EXPECT_EQ(res->status, 202) << res->body;
    auto id = json::parse(res->body)["job"]["id"].get<long>();
    jobs.wait(id, 30s);
    return json::parse(client->Get("/jobs/" + std::to_string(id))->body);
  }
};

TEST_F(HttpTest, ImportCodeSetAndErrors) {
  auto health = client->Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  httplib::Headers key{{"Idempotency-Key", "import-1"}};
  auto body = json{{"name", testing::kConditions}, {"content", slurp(files.conditions)}}.dump();
  auto res = client->Post("/terminologies/import", key, body, "application/json");
  EXPECT_EQ(res->get_header_value("Location").rfind("/jobs/", 0), 0u);
  auto job = wait_job(res);
  EXPECT_EQ(job["status"], "succeeded");
  auto dup = client->Post("/terminologies/import", key, body, "application/json");
  EXPECT_TRUE(json::parse(dup->body)["job"]["deduplicated"].get<bool>());

  auto terms = json::parse(client->Get("/terminologies")->body);
  ASSERT_EQ(terms.size(), 1u);

  auto bad_filter = client->Post("/code-sets",
                                 json{{"terminology", testing::kConditions}, {"name", "x"},
                                      {"filter", "code_id = \"A\" and nope"}}
                                     .dump(),
                                 "application/json");
  EXPECT_EQ(bad_filter->status, 400);
  auto err = json::parse(bad_filter->body)["error"];
  EXPECT_EQ(err["code"], "QueryError");
  EXPECT_TRUE(err.contains("position"));

  EXPECT_EQ(client->Get("/code-sets/999")->status, 404);
  EXPECT_EQ(client->Get("/jobs/999")->status, 404);
  EXPECT_EQ(client->Post("/runs", "{", "application/json")->status, 400);
  EXPECT_EQ(client->Post("/runs", slurp(files.run_config), "application/json")->status, 404)
      << "unknown code set is rejected before queueing";

  auto cs = wait_job(client->Post("/code-sets",
                                  json{{"terminology", testing::kConditions}, {"name", "uti"},
                                       {"filter", "string contains \"urinary\""}}
                                      .dump(),
                                  "application/json"));
  auto set = json::parse(client->Get(cs["result_ref"].get<std::string>())->body);
  EXPECT_EQ(set["members"], json::array({"C01"}));
}

TEST_F(HttpTest, RunTriplesMatchesAndCustomTables) {
  ws.import_terminology(testing::kConditions, store::read_delimited_file(files.conditions));
  ws.import_terminology(testing::kTreatments, store::read_delimited_file(files.treatments));
  ws.create_code_set(testing::kConditions, testing::kConditionSet, "all", std::nullopt);
  ws.create_code_set(testing::kTreatments, testing::kTreatmentSet, "all", std::string(testing::kExpansionStyle));

  auto run_job = wait_job(client->Post("/runs", slurp(files.run_config), "application/json"));
  ASSERT_EQ(run_job["status"], "succeeded") << run_job.dump();
  EXPECT_EQ(run_job["done"], run_job["total"]);
  auto run = json::parse(client->Get(run_job["result_ref"].get<std::string>())->body);
  EXPECT_EQ(run["status"], "completed");
  auto triples = json::parse(client->Get(run_job["result_ref"].get<std::string>() + "/triples")->body);
  EXPECT_EQ(triples.size(), 51u);

  auto batch = wait_job(client->Post(
      "/matches/batch", json{{"run_id", run["id"]}, {"code_set", testing::kTreatmentSet}}.dump(),
      "application/json"));
  EXPECT_EQ(batch["status"], "succeeded");
  auto latest = client->Get("/matches?object=nitrofurantoin");
  ASSERT_EQ(latest->status, 200) << latest->body;
  EXPECT_EQ(json::parse(latest->body)["ranked"][0]["code_id"], "T01");
  auto direct = client->Get("/matches?object=broken%20finger&code_set=all-conditions&n=2");
  ASSERT_EQ(direct->status, 200) << direct->body;
  EXPECT_EQ(json::parse(direct->body)["ranked"].size(), 2u);

  auto table = wait_job(client->Post(
      "/custom-tables",
      json{{"name", "treated"}, {"query", "SELECT subject_code_id, object_value FROM triples "
                                          "WHERE predicate = 'may be treated with'"}}
          .dump(),
      "application/json"));
  EXPECT_EQ(table["status"], "succeeded");
  auto snapshot = json::parse(client->Get("/custom-tables/treated?version=1")->body);
  EXPECT_EQ(snapshot["version"], 1);
  EXPECT_EQ(snapshot["rows"].size(), 21u);
  auto rejected = wait_job(client->Post(
      "/custom-tables", json{{"name", "bad"}, {"query", "DELETE FROM triples"}}.dump(), "application/json"));
  EXPECT_EQ(rejected["status"], "failed");

  auto hash = json::parse(client->Get("/export?hash=1")->body)["sha256"];
  EXPECT_EQ(hash, ws.store().export_hash());
}

TEST(Cli, ExitCodesAndMessages) {
  EXPECT_EQ(testing::cli({"--help"}).exit_code, 0);
  auto usage = testing::cli({"no-such-command"});
  EXPECT_EQ(usage.exit_code, 2);
  auto dir = testing::temp_dir("cli");
  auto store = (dir / "s.db").string();
  auto missing = testing::cli({"--store", store, "run", "--config", (dir / "none.json").string()});
  EXPECT_EQ(missing.exit_code, 1);
  EXPECT_NE(missing.err.find("error code=NotFound"), std::string::npos) << missing.err;
  auto bad_query = testing::cli({"--store", store, "materialize", "--name", "t", "--query", "DROP TABLE codes"});
  EXPECT_EQ(bad_query.exit_code, 1);
  EXPECT_NE(bad_query.err.find("QueryError"), std::string::npos);
}

TEST(Cli, ImportReportsRejectedRows) {
  auto dir = testing::temp_dir("cli-import");
  std::ofstream(dir / "rows.tsv") << "A\tAlpha\t0\nB\t\t0\nC\tGamma\tx\n";
  auto r = testing::cli({"--store", (dir / "s.db").string(), "import-terminology", "--name", "t", "--file",
                         (dir / "rows.tsv").string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("codes=1"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("rejected=2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("rejected row=1"), std::string::npos) << r.out;
}

#ifdef TERMGRAPH_CLI_PATH
TEST(Cli, BinaryMatchesInProcessExitCodes) {
  auto status = [](const std::string& args) {
    int rc = std::system((std::string(TERMGRAPH_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
  };
  EXPECT_EQ(status("--help"), 0);
  EXPECT_EQ(status("bogus"), 2);
  EXPECT_EQ(status("--store /nonexistent-dir/x.db export"), 1);
}
#endif

TEST(Parity, CliAndHttpProduceTheSameStore) {
  auto files = testing::make_demo(testing::temp_dir("parity"));
  auto via_cli = testing::demo_via_cli(files, (files.dir / "cli.db").string());
  auto via_http = testing::demo_via_http(files, (files.dir / "http.db").string());
  EXPECT_EQ(via_cli.size(), 64u);
  EXPECT_EQ(via_cli, via_http);
}

TEST(Demo, CheckedInTranscriptReplaysTheWorkflow) {
  testing::DemoFiles files = testing::write_demo_inputs(testing::temp_dir("demo"));
  fs::copy_file(fs::path(TERMGRAPH_DEMO_DIR) / "transcript.jsonl", files.transcript,
                fs::copy_options::overwrite_existing);
  for (const char* f : {"conditions.tsv", "treatments.tsv", "treatment_classes.tsv", "run.json"})
    EXPECT_EQ(slurp(files.dir / f), slurp(fs::path(TERMGRAPH_DEMO_DIR) / f))
        << f << " is stale; regenerate data/demo";
  std::string hashes[2];
  for (auto& h : hashes) {
    Workspace ws(testing::demo_settings(files, ":memory:"));
    testing::run_demo_workflow(ws, files);
    h = ws.store().export_hash();
  }
  EXPECT_EQ(hashes[0], hashes[1]);
}

}  // namespace
}  // namespace termgraph::service
