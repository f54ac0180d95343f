#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hilite::cli {

/// Runs one CLI invocation. Exit codes: 0 success (RunReport JSON on `out`),
/// 1 domain error (one-line JSON {code, message} on `out`), 2 usage error
/// (usage text on `err`).
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace hilite::cli
