#include <iostream>

#include "hopcrack/harness.h"

int main(int argc, char** argv) { return hopcrack::harness::cli_main(argc, argv, std::cout, std::cerr); }
