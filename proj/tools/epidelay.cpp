#include "epidelay/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return epidelay::cli::run(argc, argv, std::cout, std::cerr); }
