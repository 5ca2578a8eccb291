#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "termgraph/service/settings.hpp"

namespace termgraph::service {

// Command-line front end. args excludes the program name. Returns the exit
// code: 0 on success, 1 with a line "error code=<Name> message=<text>" on
// err for a failed operation, 2 with usage text for a malformed command
// line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& env);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace termgraph::service
