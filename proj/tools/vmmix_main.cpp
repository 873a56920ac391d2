#include <iostream>

#include "vmmix/cli.hpp"

int main(int argc, char** argv) { return vmmix::cli::Run(argc, argv, std::cout, std::cerr); }
