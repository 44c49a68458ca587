#include <iostream>

#include "sgf/cli/commands.hpp"

int main(int argc, char** argv) { return sgf::cli::run(argc, argv, std::cout, std::cerr); }
