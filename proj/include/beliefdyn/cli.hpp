#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace beliefdyn::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kOutputDirEnv = "BELIEFDYN_OUTPUT_DIR";

// Runs one invocation; args[0] is the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace beliefdyn::cli
