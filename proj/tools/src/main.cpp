#include <iostream>
#include <string>
#include <vector>

#include "dmd/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dmd::cli::RunCli(args, std::cout, std::cerr);
}
