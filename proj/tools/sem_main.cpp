#include <iostream>

#include "sem/cli.hpp"

int main(int argc, char** argv) { return sem::run_cli(argc, argv, std::cout, std::cerr); }
