#pragma once

#include "hsdetect/error.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hsd {

/// 2 for configuration errors, 3 for data errors, 4 for numeric degeneracy.
int exit_code(ErrorCategory category) noexcept;

/// Runs one `hsdetect` command; `args` excludes the program name.
/// Returns the process exit status (0 on success, 1 on unexpected failures).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hsd
