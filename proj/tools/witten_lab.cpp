#include <iostream>
#include <string>
#include <vector>

#include "witten/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return witten::dispatch(args, std::cout, std::cerr);
}
