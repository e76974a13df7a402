#include <iostream>
#include <string>
#include <vector>

#include "pargrid/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    pargrid::cli::RunSpec spec;
    try {
        spec = pargrid::cli::parse_args(args);
    } catch (const pargrid::cli::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << pargrid::cli::usage_text();
        return 2;
    }
    return pargrid::cli::run(spec, std::cout, std::cerr);
}
