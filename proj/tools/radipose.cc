#include <iostream>
#include <string>
#include <vector>

#include "radipose/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return radipose::run_cli(args, std::cout, std::cerr);
}
