#include <iostream>

#include "cavity/cli.hpp"

int main(int argc, char** argv) { return cavity::run_cli(argc, argv, std::cout, std::cerr); }
