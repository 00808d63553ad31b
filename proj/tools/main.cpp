#include <iostream>

#include "kfat_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return kfat::run_cli(args, std::cout, std::cerr);
}
