#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return divret::cli::cli_main(argc, argv, std::cout, std::cerr);
}
