#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "support/fixtures.hpp"

namespace termgraph::testing {

// Settings file equivalent to demo_settings(files, store_path).
std::filesystem::path write_demo_settings_file(const DemoFiles& files, const std::string& store_path);

struct CliResult {
  int exit_code = 0;
  std::string out;
  std::string err;
};

// Runs the CLI in-process with an empty environment.
CliResult cli(const std::vector<std::string>& args);

// The demo workflow (imports, code sets, run, batch match) driven through
// the CLI, against a fresh store at `store_path`. Returns the export hash.
std::string demo_via_cli(const DemoFiles& files, const std::string& store_path);

// The same workflow through HTTP requests to a server on a free local port.
std::string demo_via_http(const DemoFiles& files, const std::string& store_path);

}  // namespace termgraph::testing
