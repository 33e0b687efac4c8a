#include <iostream>

#include "pa_amm/cli.hpp"

int main(int argc, char** argv) { return pa_amm::cli::run(argc, argv, std::cout, std::cerr); }
