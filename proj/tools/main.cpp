#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return vcdet::cli::run_cli(argc, argv, std::cout, std::cerr); }
