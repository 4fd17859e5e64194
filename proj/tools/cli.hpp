#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crisk::cli {

/// Exit codes: 0 success, 1 data or runtime error (JSON on `err`),
/// 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crisk::cli

int cli_main(int argc, char** argv);
