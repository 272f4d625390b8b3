#include <iostream>
#include "wsim/cli.hpp"
int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wsim::run_cli(args, std::cout, std::cerr);
}
