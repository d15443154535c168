// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "geosdm/cli/commands.hpp"

int main(int argc, char** argv) { return geosdm::cli::run(argc, argv, std::cout, std::cerr); }
