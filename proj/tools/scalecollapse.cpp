#include <iostream>

#include "scl/cli.hpp"

int main(int argc, char** argv) { return scl::run_cli(argc, argv, std::cout, std::cerr); }
