#include <iostream>

#include "l2pub/cli.hpp"

int main(int argc, char** argv) { return l2pub::run_cli(argc, argv, std::cout, std::cerr); }
