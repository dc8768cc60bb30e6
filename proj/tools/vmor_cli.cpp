#include <vmor/bench.hpp>

#include <iostream>

int main(int argc, char **argv) { return vmor::bench::cli_main(argc, argv, std::cout, std::cerr); }
