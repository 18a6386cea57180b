#include <iostream>
#include <string>
#include <vector>

#include "qcpde/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qcpde::cli::run(args, std::cerr);
}
