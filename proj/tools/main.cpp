#include <iostream>

#include "holeburn/cli.hpp"

int main(int argc, char** argv) {
  return holeburn::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
