#include <iostream>

#include "qapool/cli.hpp"

int main(int argc, char** argv) {
  return qapool::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
