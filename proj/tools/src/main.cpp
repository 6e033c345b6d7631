#include <iostream>

#include "mlbn/app/cli.hpp"

int main(int argc, char** argv) { return mlbn::app::run_cli(argc, argv, std::cout, std::cerr); }
