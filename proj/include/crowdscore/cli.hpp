#pragma once

#include <string>
#include <vector>

namespace crowdscore {

/// Entry point behind the `crowdscore` binary. `args` excludes argv[0].
/// Exit codes: 0 success, 1 verification failure, 2 config error,
/// 3 backend error, 4 data error. Errors print one machine-parsable JSON
/// line to stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace crowdscore
