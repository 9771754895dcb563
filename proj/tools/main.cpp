#include <iostream>
#include <string>
#include <vector>

#include "msenc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return msenc::run(args, std::cout, std::cerr);
}
