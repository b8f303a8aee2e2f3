#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return qgf::cli::run(argc, argv, std::cout, std::cerr); }
