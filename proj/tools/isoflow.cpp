#include <iostream>

#include "isoflow/cli.hpp"

int main(int argc, char** argv) { return isoflow::run_cli(argc, argv, std::cout, std::cerr); }
