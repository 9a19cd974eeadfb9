#include "opkit/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return opkit::cli::run(argc, argv, std::cout, std::cerr); }
