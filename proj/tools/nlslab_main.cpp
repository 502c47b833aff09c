#include <string>
#include <vector>

#include "nlslab/cli.hpp"

int main(int argc, char** argv) {
    return nlslab::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
