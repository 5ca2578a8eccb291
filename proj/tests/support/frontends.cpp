#include "support/frontends.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/service/cli.hpp"
#include "termgraph/service/http_server.hpp"
#include "termgraph/service/jobs.hpp"

namespace termgraph::testing {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); }

CliResult checked(const std::vector<std::string>& args) {
  auto r = cli(args);
  if (r.exit_code != 0) fail(args.front() + " failed: " + r.err);
  return r;
}

std::string field(const std::string& out, const std::string& key) {
  auto at = out.find(key + "=");
  if (at == std::string::npos) fail("no " + key + " in: " + out);
  at += key.size() + 1;
  return out.substr(at, out.find_first_of(" \n", at) - at);
}

class Client {
 public:
  explicit Client(int port) : http_("127.0.0.1", port) {}

  json get(const std::string& path) {
    auto res = http_.Get(path);
    if (!res || res->status != 200) fail("GET " + path + " failed");
    return json::parse(res->body);
  }

  // Posts a mutation and waits for its job; returns the finished job.
  json submit(const std::string& path, const std::string& body) {
    auto res = http_.Post(path, body, "application/json");
    if (!res || res->status != 202) fail("POST " + path + ": " + (res ? res->body : "no response"));
    auto id = json::parse(res->body)["job"]["id"].get<long>();
    for (int i = 0; i < 3000; ++i) {
      auto job = get("/jobs/" + std::to_string(id));
      auto status = job["status"].get<std::string>();
      if (status == "succeeded") return job;
      if (status != "queued" && status != "running") fail("job " + path + " ended " + job.dump());
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    fail("job for " + path + " did not finish");
  }

 private:
  httplib::Client http_;
};

}  // namespace

fs::path write_demo_settings_file(const DemoFiles& files, const std::string& store_path) {
  auto s = demo_settings(files, store_path);
  json j;
  j["store"] = s.store_path;
  j["provider"] = {{"kind", s.provider.kind}, {"transcript", s.provider.transcript}, {"model", s.provider.model}};
  if (!s.embedder.lookup_file.empty()) j["embedder"] = {{"lookup_file", s.embedder.lookup_file}};
  j["pricing"] = {{"prompt_token", s.pricing.per_prompt_token.to_string()},
                  {"completion_token", s.pricing.per_completion_token.to_string()}};
  auto path = fs::path(store_path).parent_path() / (fs::path(store_path).stem().string() + ".settings.json");
  std::ofstream(path) << j.dump(2) << '\n';
  return path;
}

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.exit_code = service::run_cli(args, out, err, [](const char*) -> const char* { return nullptr; });
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string demo_via_cli(const DemoFiles& files, const std::string& store_path) {
  auto settings = write_demo_settings_file(files, store_path).string();
  checked({"--settings", settings, "import-terminology", "--name", kConditions, "--file",
           files.conditions.string()});
  checked({"--settings", settings, "import-terminology", "--name", kTreatments, "--file",
           files.treatments.string(), "--hierarchy", files.hierarchy.string()});
  checked({"--settings", settings, "create-code-set", "--terminology", kConditions, "--name", kConditionSet});
  checked({"--settings", settings, "create-code-set", "--terminology", kTreatments, "--name", kTreatmentSet,
           "--expansion-style", kExpansionStyle});
  auto run = checked({"--settings", settings, "run", "--config", files.run_config.string()});
  checked({"--settings", settings, "match", "--code-set", kTreatmentSet, "--run", field(run.out, "run")});
  auto hash = checked({"--settings", settings, "export", "--hash"}).out;
  while (!hash.empty() && hash.back() == '\n') hash.pop_back();
  return hash;
}

std::string demo_via_http(const DemoFiles& files, const std::string& store_path) {
  auto settings = service::load_settings(write_demo_settings_file(files, store_path).string());
  service::Workspace ws(settings);
  service::JobManager jobs(ws.store());
  service::HttpServer server(ws, jobs);
  int port = server.bind("127.0.0.1", 0);
  std::thread serving([&] { server.listen(); });
  std::string hash;
  std::exception_ptr failure;
  try {
    Client c(port);
    c.submit("/terminologies/import",
             json{{"name", kConditions}, {"format", "tsv"}, {"content", slurp(files.conditions)}}.dump());
    c.submit("/terminologies/import", json{{"name", kTreatments},
                                           {"format", "tsv"},
                                           {"content", slurp(files.treatments)},
                                           {"hierarchy", slurp(files.hierarchy)}}
                                          .dump());
    c.submit("/code-sets", json{{"terminology", kConditions}, {"name", kConditionSet}}.dump());
    c.submit("/code-sets", json{{"terminology", kTreatments},
                                {"name", kTreatmentSet},
                                {"expansion_style", kExpansionStyle}}
                               .dump());
    auto run = c.submit("/runs", slurp(files.run_config));
    auto ref = run["result_ref"].get<std::string>();
    auto run_id = std::stol(ref.substr(ref.rfind('/') + 1));
    c.submit("/matches/batch", json{{"run_id", run_id}, {"code_set", kTreatmentSet}}.dump());
    hash = c.get("/export?hash=1")["sha256"].get<std::string>();
  } catch (...) {
    failure = std::current_exception();
  }
  server.stop();
  serving.join();
  if (failure) std::rethrow_exception(failure);
  return hash;
}

}  // namespace termgraph::testing
