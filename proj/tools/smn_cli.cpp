#include "smn/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return smn::cli::run(argc, argv, std::cout, std::cerr); }
