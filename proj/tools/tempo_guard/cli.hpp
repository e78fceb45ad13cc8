// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tempo_guard::cli {

inline constexpr int kExitBenign = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitAttack = 2;
inline constexpr int kExitIo = 3;

/// Runs one sub-command; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tempo_guard::cli
