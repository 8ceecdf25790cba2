#include <string>
#include <vector>

#include "tfl/harness.hpp"

int main(int argc, char** argv) {
    return tfl::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
