#include <iostream>

#include "bsm/cli/commands.hpp"

int main(int argc, char** argv) { return bsm::cli::run(argc, argv, std::cout, std::cerr); }
