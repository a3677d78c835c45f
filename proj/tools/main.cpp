#include <iostream>

#include "graphrec/cli.hpp"

int main(int argc, char** argv) { return graphrec::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
