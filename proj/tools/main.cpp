#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  try {
    const auto config = critmat::cli::parse_args(argc, argv);
    if (!config) return 0;
    return critmat::cli::execute(*config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
