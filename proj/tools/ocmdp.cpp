#include "ocmdp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ocmdp::run_cli(args, std::cout, std::cerr);
}
