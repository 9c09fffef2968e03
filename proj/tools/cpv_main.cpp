#include <iostream>

#include "cpv/cli/cli.h"

int main(int argc, char** argv) { return cpv::cli::run(argc, argv, std::cout, std::cerr); }
