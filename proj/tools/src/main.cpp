#include <iostream>

#include "tango/cli/commands.hpp"

int main(int argc, char** argv) { return tango::cli::run_cli(argc, argv, std::cout, std::cerr); }
