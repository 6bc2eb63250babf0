#include <iostream>

#include "cli.h"

int main(int argc, char** argv) { return dragon::tools::RunCli(argc, argv, std::cout, std::cerr); }
