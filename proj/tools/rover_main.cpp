#include <iostream>

#include "rover/cli.hpp"

int main(int argc, char ** argv)
{
  return rover::run_cli(argc, argv, std::cout, std::cerr);
}
