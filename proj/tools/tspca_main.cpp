#include <iostream>

#include "tspca/cli.hpp"

int main(int argc, char** argv) { return tspca::cli::run(argc, argv, std::cout, std::cerr); }
