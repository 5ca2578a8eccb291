#include "termgraph/service/http_server.hpp"

#include <httplib.h>

#include <filesystem>
#include <sstream>

#include "service/wire.hpp"
#include "termgraph/extract/spec.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::service {

using wire::Json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kRunClosed:
    case ErrorCode::kEmptySet:
    case ErrorCode::kDependencyMissing:
      return 409;
    case ErrorCode::kImportEmpty:
    case ErrorCode::kRowRejected:
    case ErrorCode::kQueryError:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kTemplateError:
    case ErrorCode::kParseError:
    case ErrorCode::kKeyUnmapped:
    case ErrorCode::kConfigError:
    case ErrorCode::kMixedVectors:
    case ErrorCode::kZeroVector:
    case ErrorCode::kAccountingError:
      return 400;
    default:
      return 500;
  }
}

namespace {

void send_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

store::Id path_id(const httplib::Request& req, const char* what) {
  const auto& s = req.matches[1].str();
  try {
    std::size_t used = 0;
    auto id = std::stoll(s, &used);
    if (used == s.size()) return id;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidArgument, std::string(what) + " id must be an integer: " + s);
}

JobOutcome succeeded(std::string ref) {
  JobOutcome o;
  o.result_ref = std::move(ref);
  return o;
}

std::optional<std::string> idempotency_key(const httplib::Request& req) {
  if (!req.has_header("Idempotency-Key")) return std::nullopt;
  auto key = req.get_header_value("Idempotency-Key");
  if (key.empty()) return std::nullopt;
  return key;
}

std::string param(const httplib::Request& req, const char* name, const std::string& fallback) {
  return req.has_param(name) ? req.get_param_value(name) : fallback;
}

double number_param(const httplib::Request& req, const char* name, double fallback) {
  if (!req.has_param(name)) return fallback;
  auto v = text::parse_number(req.get_param_value(name));
  if (!v) throw Error(ErrorCode::kInvalidArgument, std::string("query parameter '") + name + "' is not a number");
  return *v;
}

}  // namespace

struct HttpServer::Impl {
  Workspace& ws;
  JobManager& jobs;
  httplib::Server server;

  Impl(Workspace& w, JobManager& j) : ws(w), jobs(j) { routes(); }

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Wraps a handler so library errors become JSON error responses.
  static httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_json(res, http_status_for(e.code()), wire::error(e));
      } catch (const std::exception& e) {
        send_json(res, 500, wire::error(Error(ErrorCode::kStorageError, e.what())));
      }
    };
  }

  void accepted(httplib::Response& res, const Submission& s) {
    auto body = wire::job(s.job);
    body["deduplicated"] = s.deduplicated;
    res.set_header("Location", "/jobs/" + std::to_string(s.job.id));
    send_json(res, 202, Json{{"job", body}});
  }

  void routes() {
    const auto& static_dir = ws.settings().static_dir;
    if (!static_dir.empty() && std::filesystem::is_directory(static_dir))
      server.set_mount_point("/", static_dir);

    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
      res.status = 204;
    });

    server.Get("/health", guarded([](const auto&, auto& res) {
      send_json(res, 200, Json{{"status", "ok"}});
    }));

    server.Post("/terminologies/import", guarded([this](const auto& req, auto& res) {
      auto request = wire::parse_import_request(req.body);
      auto parsed = wire::parse_rows(request.format, request.content);
      std::optional<std::vector<store::HierarchyEdge>> edges;
      if (request.hierarchy) {
        std::istringstream in(*request.hierarchy);
        edges = store::read_hierarchy(in);
      }
      accepted(res, jobs.submit(kJobTerminologyImport, idempotency_key(req), req.body,
                                [this, request, parsed, edges](JobContext& ctx) {
                                  ctx.progress(0, static_cast<std::int64_t>(parsed.rows_read));
                                  auto report = ws.import_terminology(request.name, parsed);
                                  if (edges) ws.import_hierarchy(request.name, *edges);
                                  ctx.progress(static_cast<std::int64_t>(parsed.rows_read),
                                               static_cast<std::int64_t>(parsed.rows_read));
                                  return succeeded("/terminologies/" + std::to_string(report.terminology.id));
                                }));
    }));

    server.Get("/terminologies", guarded([this](const auto&, auto& res) {
      Json out = Json::array();
      for (const auto& t : ws.store().list_terminologies()) out.push_back(wire::terminology_summary(t));
      send_json(res, 200, out);
    }));

    server.Post("/code-sets", guarded([this](const auto& req, auto& res) {
      auto request = wire::parse_code_set_request(req.body);
      store::CodeFilter::parse(request.filter);  // reject bad filters before queueing
      accepted(res, jobs.submit(kJobCodeSet, idempotency_key(req), req.body, [this, request](JobContext&) {
        auto result = ws.create_code_set(request.terminology, request.name, request.filter,
                                         request.expansion_style);
        return succeeded("/code-sets/" + std::to_string(result.code_set.id));
      }));
    }));

    server.Get("/code-sets", guarded([this](const auto&, auto& res) {
      Json out = Json::array();
      for (const auto& cs : ws.store().list_code_sets()) out.push_back(wire::code_set(cs));
      send_json(res, 200, out);
    }));

    server.Get(R"(/code-sets/(\d+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, wire::code_set(ws.store().get_code_set(path_id(req, "code set"))));
    }));

    server.Post("/runs", guarded([this](const auto& req, auto& res) {
      auto config = extract::parse_run_config(req.body);
      ws.code_set_by_name(config.code_set);
      accepted(res, jobs.submit(kJobRelationshipRun, idempotency_key(req), req.body,
                                [this, config](JobContext& ctx) {
                                  auto report = ws.run(config, [&](std::size_t done, std::size_t total) {
                                    ctx.progress(static_cast<std::int64_t>(done),
                                                 static_cast<std::int64_t>(total));
                                  });
                                  JobOutcome outcome;
                                  outcome.result_ref = "/runs/" + std::to_string(report.run_id);
                                  if (report.status == store::RunStatus::kKilledBudget)
                                    outcome.status = store::JobStatus::kKilledBudget;
                                  else if (report.status == store::RunStatus::kFailed) {
                                    outcome.status = store::JobStatus::kFailed;
                                    outcome.error = report.error_code + ": " + report.error;
                                  }
                                  return outcome;
                                }));
    }));

    server.Get("/runs", guarded([this](const auto&, auto& res) {
      Json out = Json::array();
      for (const auto& r : ws.store().list_runs()) out.push_back(wire::run(r));
      send_json(res, 200, out);
    }));

    server.Get(R"(/runs/(\d+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, wire::run(ws.store().get_run(path_id(req, "run"))));
    }));

    server.Get(R"(/runs/(\d+)/triples)", guarded([this](const auto& req, auto& res) {
      auto id = path_id(req, "run");
      ws.store().get_run(id);
      Json out = Json::array();
      for (const auto& t : ws.store().triples_for_run(id)) out.push_back(wire::triple(t));
      send_json(res, 200, out);
    }));

    server.Post("/matches/batch", guarded([this](const auto& req, auto& res) {
      auto request = wire::parse_batch_request(req.body);
      ws.code_set_by_name(request.code_set);
      ws.store().get_run(request.run_id);
      accepted(res, jobs.submit(kJobMatchBatch, idempotency_key(req), req.body, [this, request](JobContext& ctx) {
        auto result = ws.batch_match(request);
        auto n = static_cast<std::int64_t>(result.matches.size());
        ctx.progress(n, n);
        return succeeded("/runs/" + std::to_string(request.run_id) + "/triples");
      }));
    }));

    server.Get("/matches", guarded([this](const auto& req, auto& res) {
      auto object = param(req, "object", "");
      if (text::trim(object).empty())
        throw Error(ErrorCode::kInvalidArgument, "query parameter 'object' is required");
      if (req.has_param("code_set")) {
        MatchRequest m;
        m.x = object;
        m.code_set = req.get_param_value("code_set");
        m.selection = match::parse_selection(param(req, "subject_kinds", "CLS"),
                                             param(req, "object_kinds", "CLS"),
                                             param(req, "include_expansions", "0") == "1");
        m.z = number_param(req, "z", 2.0);
        m.n = static_cast<int>(number_param(req, "n", match::kDefaultTopN));
        send_json(res, 200, wire::match_result(ws.match(m), object, m.code_set));
        return;
      }
      auto stored = ws.store().latest_match_for(object, std::nullopt);
      if (!stored) throw Error(ErrorCode::kNotFound, "no stored match for '" + object + "'");
      send_json(res, 200, wire::stored_match(*stored));
    }));

    server.Post("/custom-tables", guarded([this](const auto& req, auto& res) {
      auto request = wire::parse_custom_table_request(req.body);
      accepted(res, jobs.submit(kJobCustomTable, idempotency_key(req), req.body, [this, request](JobContext& ctx) {
        auto table = ws.materialize(request.name, request.query);
        auto n = static_cast<std::int64_t>(table.rows.size());
        ctx.progress(n, n);
        return succeeded("/custom-tables/" + table.name + "?version=" + std::to_string(table.version));
      }));
    }));

    server.Get(R"(/custom-tables/([^/]+))", guarded([this](const auto& req, auto& res) {
      std::optional<int> version;
      if (req.has_param("version")) version = static_cast<int>(number_param(req, "version", 0));
      send_json(res, 200, wire::custom_table(ws.store().get_custom_table(req.matches[1].str(), version)));
    }));

    server.Get(R"(/jobs/(\d+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, wire::job(jobs.get(path_id(req, "job"))));
    }));

    server.Get("/export", guarded([this](const auto& req, auto& res) {
      if (param(req, "hash", "0") == "1")
        send_json(res, 200, Json{{"sha256", ws.store().export_hash()}});
      else
        res.set_content(ws.store().export_logical(), "text/plain; charset=utf-8");
    }));
  }
};

HttpServer::HttpServer(Workspace& workspace, JobManager& jobs)
    : impl_(std::make_unique<Impl>(workspace, jobs)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : port;
  if (port != 0 && !impl_->server.bind_to_port(host, port)) bound = -1;
  if (bound < 0)
    throw Error(ErrorCode::kConfigError,
                "cannot listen on " + host + ":" + std::to_string(port) + " (address in use or not available)");
  return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

bool HttpServer::is_running() const { return impl_->server.is_running(); }

}  // namespace termgraph::service
