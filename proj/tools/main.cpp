#include <iostream>

#include "fowr_cli.hpp"

int main(int argc, char** argv) { return fowr::cli::run(argc, argv, std::cout, std::cerr); }
