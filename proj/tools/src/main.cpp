#include <iostream>

#include "cpa_cli/cli.hpp"

int main(int argc, char** argv) { return cpa::cli::main_entry(argc, argv, std::cout, std::cerr); }
