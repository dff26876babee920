// Built-in self-test: evaluates the pipeline on a conjugate normal-location
// model where every criterion has a closed form, plus a battery of exact
// algebraic identities on a synthetic ensemble. Runs in seconds, needs no
// config. Returns true when every check passes; the table of results is
// appended to `lines`.
#pragma once

#include <string>
#include <vector>

namespace slt::tools {

bool run_oracle_check(std::vector<std::string>& lines);

}  // namespace slt::tools
