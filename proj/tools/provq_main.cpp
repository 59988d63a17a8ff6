#include <iostream>
#include <string>
#include <vector>

#include "provq/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return provq::cli_run(std::move(args), std::cout, std::cerr);
}
