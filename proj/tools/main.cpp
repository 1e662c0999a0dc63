#include <spdnn/cli.hpp>

int main(int argc, char** argv) {
    return spdnn::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
