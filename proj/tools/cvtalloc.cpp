#include <iostream>
#include <string>
#include <vector>

#include "cvtalloc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cvtalloc::cli::run(args, std::cout, std::cerr);
}
