#include <iostream>
#include <string>
#include <vector>

#include "hybridcorr_cli/cli.hpp"

int main(int argc, char** argv) {
    return hcorr::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
