#include <iostream>

#include "kramers/cli.hpp"

int main(int argc, char** argv) { return kramers::run_cli(argc, argv, std::cout, std::cerr); }
