#include <iostream>

#include "bmcomp/cli.hpp"

int main(int argc, char** argv) {
  return bmcomp::run_cli(argc, argv, std::cout, std::cerr);
}
