#include "ntkcv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ntkcv::run_cli(argc, argv, std::cout, std::cerr); }
