#include <iostream>

#include "mgsim/cli.hpp"

int main(int argc, char** argv) { return mgsim::cli_main(argc, argv, std::cout, std::cerr); }
