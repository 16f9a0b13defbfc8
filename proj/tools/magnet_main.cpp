#include <iostream>

#include "magnet/cli.hpp"

int main(int argc, char** argv) { return magnet::cli::dispatch(argc, argv, std::cout, std::cerr); }
