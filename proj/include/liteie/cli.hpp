#pragma once

#include <string>
#include <vector>

namespace liteie {

// Dispatches the enhance/train/eval/bench/ablate/gradcheck subcommands.
// Returns 0 on success, 1 on usage errors, 2 on runtime errors.
int run_cli(const std::vector<std::string>& args);

}  // namespace liteie
