#include <iostream>

#include "tsnmt/app/cli.h"

int main(int argc, char** argv) { return tsnmt::app::run(argc, argv, std::cout, std::cerr); }
