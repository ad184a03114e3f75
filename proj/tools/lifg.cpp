#include <iostream>

#include "lifg/cli.hpp"

int main(int argc, char** argv) { return lifg::cli::run(argc, argv, std::cout, std::cerr); }
