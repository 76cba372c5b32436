#include <iostream>

#include "tabppo/cli.hpp"

int main(int argc, char** argv) { return tabppo::cli::run(argc, argv, std::cout, std::cerr); }
