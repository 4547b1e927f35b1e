#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return meanerg::cli::run(argc, argv, std::cout, std::cerr); }
