#pragma once

#include <memory>
#include <string>

#include "termgraph/error.hpp"
#include "termgraph/service/jobs.hpp"
#include "termgraph/service/workspace.hpp"

namespace termgraph::service {

// JSON over HTTP for the console and for scripts. Mutations are queued as
// jobs and answered with 202 and the job record; an Idempotency-Key header
// makes a retried request return the original job instead of a new one.
//
//   GET  /health
//   POST /terminologies/import      {name, format, content, hierarchy?}
//   GET  /terminologies
//   POST /code-sets                 {terminology, name, filter, expansion_style?}
//   GET  /code-sets, /code-sets/{id}
//   POST /runs                      run configuration
//   GET  /runs, /runs/{id}, /runs/{id}/triples
//   POST /matches/batch             {run_id, code_set, subject_kinds, object_kinds,
//                                    include_expansions, z, n}
//   GET  /matches?object=...[&code_set=...&n=&z=&subject_kinds=&object_kinds=]
//   POST /custom-tables             {name, query}
//   GET  /custom-tables/{name}[?version=]
//   GET  /jobs/{id}
//   GET  /export[?hash=1]
//
// Errors come back as {"error": {"code", "message"}} with 404 for NotFound,
// 409 for state conflicts, 400 for bad input and 500 otherwise.
class HttpServer {
 public:
  HttpServer(Workspace& workspace, JobManager& jobs);
  ~HttpServer();

  // Binds the socket; port 0 picks a free port. Returns the bound port.
  // Throws kConfigError when the address cannot be bound.
  int bind(const std::string& host, int port);
  // Serves on the bound socket until stop().
  void listen();
  void stop();
  bool is_running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

int http_status_for(ErrorCode code);

}  // namespace termgraph::service
