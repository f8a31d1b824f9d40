#include <iostream>

#include "nercc/cli.hpp"

int main(int argc, char** argv) { return nercc::run_cli(argc, argv, std::cout, std::cerr); }
