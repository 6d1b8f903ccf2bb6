#include <iostream>
#include <string>
#include <vector>

#include "beliefdyn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return beliefdyn::cli::run(args, std::cout, std::cerr);
}
