#include <iostream>

#include "limbgo_cli/cli.hpp"

int main(int argc, char** argv) {
    return limbgo::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
