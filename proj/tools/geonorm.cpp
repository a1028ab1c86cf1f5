#include <iostream>

#include "geonorm/cli.hpp"

int main(int argc, char** argv) {
  return geonorm::cli::run(argc, argv, std::cout, std::cerr);
}
