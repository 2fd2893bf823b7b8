#include <iostream>

#include "lvs/cli/commands.hpp"

int main(int argc, char ** argv) { return lvs::cli::run(argc, argv, std::cout, std::cerr); }
