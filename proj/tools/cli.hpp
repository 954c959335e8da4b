#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "morevqa/pipeline.hpp"

namespace morevqa::cli {

enum ExitCode { kOk = 0, kItemFailures = 1, kFatal = 2 };

/// Runs the command line tool; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Stage-by-stage rendering printed by `morevqa run`.
std::string render_trace_text(const SystemOutput& out, const std::vector<std::string>& candidates = {});

}  // namespace morevqa::cli
