#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msenc {

// Command driver. Returns 0 on success, 1 on data/usage errors, 2 on
// convergence or structural model failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msenc
