#include <iostream>
#include <string>
#include <vector>

#include "vvlab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return vvlab::cli::run_cli(args, std::cout, std::cerr);
}
