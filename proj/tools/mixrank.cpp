#include <iostream>

#include "mixrank/cli.hpp"

int main(int argc, char** argv) { return mixrank::cli::dispatch(argc, argv, std::cout, std::cerr); }
