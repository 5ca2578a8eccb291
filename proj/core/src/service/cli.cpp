#include "termgraph/service/cli.hpp"

#include <pthread.h>

#include <CLI11.hpp>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "service/wire.hpp"
#include "termgraph/error.hpp"
#include "termgraph/service/http_server.hpp"
#include "termgraph/service/jobs.hpp"
#include "termgraph/service/workspace.hpp"
#include "termgraph/store/import_format.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::service {

namespace {

struct GlobalOptions {
  std::string settings_file;
  std::string store;
  std::string provider;
  std::string transcript;
  std::string model;
  std::string embedder_file;
};

struct ImportOptions {
  std::string name;
  std::string file;
  std::string format;
  std::string hierarchy;
};

struct CodeSetOptions {
  std::string terminology;
  std::string name;
  std::string filter = "all";
  std::string expansion_style;
};

struct RunOptions {
  std::string config;
  std::string report;
  int workers = 0;
};

struct MatchOptions {
  std::string string;
  std::string code_set;
  int n = match::kDefaultTopN;
  double z = 2.0;
  std::string subject_kinds = "CLS";
  std::string object_kinds = "CLS";
  bool include_expansions = false;
  store::Id run = 0;
  std::string review;
};

struct MaterializeOptions {
  std::string name;
  std::string query;
  std::string query_file;
};

struct ServeOptions {
  std::string host;
  int port = -1;
  std::string static_dir;
  int threads = 2;
};

struct ExportOptions {
  bool hash = false;
  std::string out;
};

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, std::string("cannot open ") + what + " " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_for(const std::string& explicit_format, const std::string& path) {
  if (!explicit_format.empty()) return explicit_format;
  auto lower = text::to_lower(path);
  auto ends = [&](const char* ext) {
    std::string e(ext);
    return lower.size() >= e.size() && lower.compare(lower.size() - e.size(), e.size(), e) == 0;
  };
  if (ends(".csv")) return "csv";
  if (ends(".json")) return "columnar";
  return "tsv";
}

Settings resolve_settings(const GlobalOptions& g, const EnvLookup& env) {
  Settings s = g.settings_file.empty() ? Settings{} : load_settings(g.settings_file);
  apply_env_overrides(s, env);
  if (!g.store.empty()) s.store_path = g.store;
  if (!g.provider.empty()) s.provider.kind = g.provider;
  if (!g.transcript.empty()) s.provider.transcript = g.transcript;
  if (!g.model.empty()) s.provider.model = g.model;
  if (!g.embedder_file.empty()) s.embedder.lookup_file = g.embedder_file;
  return s;
}

int cmd_import(Workspace& ws, const ImportOptions& o, std::ostream& out) {
  auto content = read_file(o.file, "terminology file");
  auto parsed = wire::parse_rows(format_for(o.format, o.file), content);
  std::optional<std::vector<store::HierarchyEdge>> edges;
  if (!o.hierarchy.empty()) {
    std::istringstream in(read_file(o.hierarchy, "hierarchy file"));
    edges = store::read_hierarchy(in);
  }
  auto report = ws.import_terminology(o.name, parsed);
  out << "terminology=" << report.terminology.name << " id=" << report.terminology.id
      << " codes=" << report.terminology.codes.size()
      << " strings=" << report.terminology.string_count() << " rows_read=" << report.rows_read
      << " rejected=" << report.rows_rejected << " duplicates=" << report.duplicates_skipped << '\n';
  for (const auto& r : report.rejections) out << "rejected row=" << r.row_index << " reason=" << r.reason << '\n';
  if (edges) {
    ws.import_hierarchy(o.name, *edges);
    out << "hierarchy=" << o.name << " edges=" << edges->size() << '\n';
  }
  return 0;
}

int cmd_code_set(Workspace& ws, const CodeSetOptions& o, std::ostream& out, std::ostream& err) {
  std::optional<std::string> style;
  if (!o.expansion_style.empty()) style = o.expansion_style;
  auto result = ws.create_code_set(o.terminology, o.name, o.filter, style);
  const auto& cs = result.code_set;
  out << "code_set=" << cs.name << " id=" << cs.id << " members=" << cs.member_code_ids.size()
      << " version=" << cs.version << '\n';
  if (cs.empty_warning) err << "warning: filter matched no codes\n";
  if (result.expansions) {
    const auto& e = *result.expansions;
    out << "expansions requested=" << e.requested << " generated=" << e.generated
        << " cached=" << e.cached << " failed=" << e.failed << " killed=" << (e.killed ? 1 : 0) << '\n';
  }
  return 0;
}

int cmd_run(Workspace& ws, const RunOptions& o, std::ostream& out, std::ostream& err) {
  auto config = extract::load_run_config(o.config);
  if (o.workers > 0) config.workers = o.workers;
  for (const auto& g : config.groups)
    if (!g.prompt().placeholder_near_end())
      err << "warning: group " << g.id << ": the concept placeholder is far from the end of the template\n";
  auto report = ws.run(config);
  auto json = report.to_json();
  if (!o.report.empty()) {
    std::ofstream f(o.report, std::ios::binary);
    if (!f) throw Error(ErrorCode::kNotFound, "cannot write report file " + o.report);
    f << json << '\n';
  }
  out << "run=" << report.run_id << " status=" << store::run_status_name(report.status)
      << " triples=" << report.triples_written << " calls=" << report.provider_calls
      << " cost=" << report.cost.to_string() << '\n';
  if (report.status == store::RunStatus::kFailed) {
    err << "error code=" << report.error_code << " message=" << report.error << '\n';
    return 1;
  }
  return 0;
}

int cmd_match(Workspace& ws, const MatchOptions& o, std::ostream& out) {
  auto selection = match::parse_selection(o.subject_kinds, o.object_kinds, o.include_expansions);
  std::vector<store::StoredMatch> for_review;
  if (o.run != 0) {
    auto batch = ws.batch_match({o.run, o.code_set, selection, o.z, o.n});
    out << "batch run=" << o.run << " objects=" << batch.matches.size()
        << " computed=" << batch.computed << " cached=" << batch.cached << '\n';
    for_review = batch.matches;
  } else {
    if (o.string.empty())
      throw Error(ErrorCode::kInvalidArgument, "match needs --string or --run");
    auto result = ws.match({o.string, o.code_set, selection, o.z, o.n});
    auto cs = ws.code_set_by_name(o.code_set);
    auto terminology = ws.store().get_terminology(cs.terminology_id);
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
      const auto& r = result.ranked[i];
      const auto* code = terminology.find(r.code_id);
      out << i + 1 << '\t' << r.code_id << '\t' << text::format_number(r.distance) << '\t'
          << (code ? code->main_text() : std::string()) << '\n';
    }
    if (auto stored = ws.store().find_match(result.query_fingerprint)) for_review.push_back(*stored);
  }
  if (!o.review.empty()) {
    std::ofstream f(o.review, std::ios::binary);
    if (!f) throw Error(ErrorCode::kNotFound, "cannot write review file " + o.review);
    match::write_review_export(f, ws.store(), for_review);
  }
  return 0;
}

int cmd_materialize(Workspace& ws, const MaterializeOptions& o, std::ostream& out) {
  std::string query = o.query;
  if (!o.query_file.empty()) query = read_file(o.query_file, "query file");
  if (text::trim(query).empty()) throw Error(ErrorCode::kInvalidArgument, "materialize needs --query or --query-file");
  auto table = ws.materialize(o.name, query);
  out << "table=" << table.name << " version=" << table.version << " rows=" << table.rows.size() << '\n';
  out << text::join(table.columns, "\t") << '\n';
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (const auto& c : row) cells.push_back(c ? *c : "NULL");
    out << text::join(cells, "\t") << '\n';
  }
  return 0;
}

int cmd_serve(Workspace& ws, const ServeOptions& o, std::ostream& out) {
  // Block termination signals here so every server thread inherits the
  // mask; a dedicated thread waits for them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigset_t previous;
  pthread_sigmask(SIG_BLOCK, &signals, &previous);

  int rc = 0;
  {
    ws.store().fail_unfinished_jobs("interrupted by service restart");
    JobManager jobs(ws.store(), static_cast<std::size_t>(std::max(1, o.threads)));
    HttpServer server(ws, jobs);
    auto host = o.host.empty() ? ws.settings().host : o.host;
    int port = server.bind(host, o.port >= 0 ? o.port : ws.settings().port);
    out << "listening on http://" << host << ':' << port << std::endl;

    std::thread watcher([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
    });
    server.listen();
    // Wake the watcher if the server ended on its own.
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
  }
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  return rc;
}

int cmd_export(Workspace& ws, const ExportOptions& o, std::ostream& out) {
  std::string body = o.hash ? ws.store().export_hash() + "\n" : ws.store().export_logical();
  if (o.out.empty()) {
    out << body;
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw Error(ErrorCode::kNotFound, "cannot write export file " + o.out);
    f << body;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env) {
  CLI::App app{"Terminology-mapped knowledge graph builder", "termgraph"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--settings", g.settings_file, "JSON settings file");
  app.add_option("--store", g.store, "Store file (overrides settings and TERMGRAPH_STORE)");
  app.add_option("--provider", g.provider, "Provider kind: replay, http or record");
  app.add_option("--transcript", g.transcript, "Replay or recording transcript");
  app.add_option("--model", g.model, "Model id sent to the provider");
  app.add_option("--embedder-file", g.embedder_file, "Fixture embedder lookup file");

  ImportOptions import_o;
  auto* import_cmd = app.add_subcommand("import-terminology", "Import code strings from a file");
  import_cmd->add_option("--name", import_o.name, "Terminology name")->required();
  import_cmd->add_option("--file", import_o.file, "Rows: code_id, string, rank")->required();
  import_cmd->add_option("--format", import_o.format, "tsv, csv or columnar (default from extension)");
  import_cmd->add_option("--hierarchy", import_o.hierarchy, "Hierarchy file (term<TAB>parent)");

  CodeSetOptions cs_o;
  auto* cs_cmd = app.add_subcommand("create-code-set", "Create a code set from a filter");
  cs_cmd->add_option("--terminology", cs_o.terminology)->required();
  cs_cmd->add_option("--name", cs_o.name)->required();
  cs_cmd->add_option("--filter", cs_o.filter, "Filter expression")->capture_default_str();
  cs_cmd->add_option("--expansion-style", cs_o.expansion_style, "Expand each member's main string");

  RunOptions run_o;
  auto* run_cmd = app.add_subcommand("run", "Run relationship prompts over a code set");
  run_cmd->add_option("--config", run_o.config, "Run configuration (JSON)")->required();
  run_cmd->add_option("--report", run_o.report, "Write the run report here");
  run_cmd->add_option("--workers", run_o.workers, "Override the configured worker count");

  MatchOptions match_o;
  auto* match_cmd = app.add_subcommand("match", "Match a string, or a run's objects, to codes");
  match_cmd->add_option("--string", match_o.string);
  match_cmd->add_option("--code-set", match_o.code_set)->required();
  match_cmd->add_option("--n", match_o.n)->capture_default_str();
  match_cmd->add_option("--z", match_o.z)->capture_default_str();
  match_cmd->add_option("--subject-kinds", match_o.subject_kinds)->capture_default_str();
  match_cmd->add_option("--object-kinds", match_o.object_kinds)->capture_default_str();
  match_cmd->add_flag("--include-expansions", match_o.include_expansions);
  match_cmd->add_option("--run", match_o.run, "Match every free-text object of this run");
  match_cmd->add_option("--review", match_o.review, "Write a review TSV here");

  MaterializeOptions mat_o;
  auto* mat_cmd = app.add_subcommand("materialize", "Snapshot a read-only query as a custom table");
  mat_cmd->add_option("--name", mat_o.name)->required();
  auto* q = mat_cmd->add_option("--query", mat_o.query);
  mat_cmd->add_option("--query-file", mat_o.query_file)->excludes(q);

  ServeOptions serve_o;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve_o.host);
  serve_cmd->add_option("--port", serve_o.port);
  serve_cmd->add_option("--static-dir", serve_o.static_dir, "Console assets served at /");
  serve_cmd->add_option("--job-threads", serve_o.threads)->capture_default_str();

  ExportOptions export_o;
  auto* export_cmd = app.add_subcommand("export", "Write the logical store export");
  export_cmd->add_flag("--hash", export_o.hash, "Print only the SHA-256 of the export");
  export_cmd->add_option("--out", export_o.out);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << '\n' << app.help();
    return 2;
  }

  try {
    auto settings = resolve_settings(g, env);
    if (!serve_o.static_dir.empty()) settings.static_dir = serve_o.static_dir;
    Workspace ws(std::move(settings));
    if (import_cmd->parsed()) return cmd_import(ws, import_o, out);
    if (cs_cmd->parsed()) return cmd_code_set(ws, cs_o, out, err);
    if (run_cmd->parsed()) return cmd_run(ws, run_o, out, err);
    if (match_cmd->parsed()) return cmd_match(ws, match_o, out);
    if (mat_cmd->parsed()) return cmd_materialize(ws, mat_o, out);
    if (serve_cmd->parsed()) return cmd_serve(ws, serve_o, out);
    if (export_cmd->parsed()) return cmd_export(ws, export_o, out);
  } catch (const Error& e) {
    err << "error code=" << error_code_name(e.code()) << " message=" << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error code=StorageError message=" << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run_cli(args, out, err, [](const char* name) -> const char* { return std::getenv(name); });
}

}  // namespace termgraph::service
