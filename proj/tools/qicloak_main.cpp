#include <iostream>

#include "qicloak/cli.hpp"

int main(int argc, char** argv) {
  return qicloak::cli::dispatch(argc, argv, std::cout, std::cerr);
}
