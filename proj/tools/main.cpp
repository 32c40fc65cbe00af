#include <iostream>

#include "cli_commands.hpp"

int main(int argc, char** argv) {
    int code = 0;
    const auto cfg = gark::cli::parse_arguments(argc, argv, code);
    if (!cfg) return code;
    return gark::cli::run(*cfg, std::cout, std::cerr);
}
