#include <string>
#include <vector>

#include "sage/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sage::run_cli(args);
}
