#include <iostream>

#include "runner.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ucplan::cli::run(args, std::cout, std::cerr);
}
