#include <iostream>

#include "nnmf/cli.hpp"

int main(int argc, char** argv) { return nnmf::run_cli(argc, argv, std::cout, std::cerr); }
