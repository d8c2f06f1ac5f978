#include <iostream>

#include "tabfuse/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tabfuse::cli::run(args, std::cout, std::cerr);
}
