#include <iostream>

#include "vtformer/cli/commands.hpp"

int main(int argc, char** argv) { return vtformer::cli::run(argc, argv, std::cout, std::cerr); }
