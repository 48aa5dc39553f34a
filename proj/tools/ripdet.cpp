#include <iostream>

#include "ripdet/cli.hpp"

int main(int argc, char** argv) {
  return ripdet::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
