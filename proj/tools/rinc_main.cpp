#include "rinc/cli.hpp"

int main(int argc, char** argv) {
  return rinc::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
