#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return rfla::cli::run(argc, argv, std::cerr); }
