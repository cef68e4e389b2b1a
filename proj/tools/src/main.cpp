#include <iostream>

#include "lgaze_cli/app.hpp"

int main(int argc, char** argv) {
  return lgaze::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
