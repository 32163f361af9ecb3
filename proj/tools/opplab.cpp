#include <iostream>
#include <string>
#include <vector>

#include "opplab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return opplab::run(args, std::cout, std::cerr);
}
