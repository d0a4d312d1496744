#include <iostream>
#include <string>
#include <vector>

#include "gramspec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gramspec::run_cli(args, std::cout, std::cerr);
}
