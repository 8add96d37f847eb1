#include <iostream>
#include <string>
#include <vector>

#include "himforge/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return himforge::cli::run(args, std::cout, std::cerr);
}
