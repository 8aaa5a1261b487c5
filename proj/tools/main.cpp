#include <string>
#include <vector>

#include "bundlenat/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bundlenat::run_cli(args);
}
