#include <iostream>

#include "wsde/cli.hpp"

int main(int argc, char** argv) { return wsde::cli::main(argc, argv, std::cout, std::cerr); }
