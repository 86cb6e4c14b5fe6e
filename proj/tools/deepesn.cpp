#include "deepesn/cli/Commands.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return deepesn::cli::cli_main(argc, argv, std::cout, std::cerr);
}
