#include <iostream>

#include "cli.hpp"
#include "deepssm/log.hpp"

int main(int argc, char** argv) {
  deepssm::log::init_from_env();
  return deepssm::cli::run(argc, argv, std::cout, std::cerr);
}
