#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace provq {

// Runs one CLI invocation. Returns 0 on success, 1 on evaluation errors,
// 2 on usage errors.
int cli_run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

}  // namespace provq
