#include <iostream>

#include "fsmap/cli.hpp"

int main(int argc, char** argv) { return fsmap::run_cli(argc, argv, std::cout, std::cerr); }
