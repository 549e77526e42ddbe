#include <iostream>

#include "verse/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return verse::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
