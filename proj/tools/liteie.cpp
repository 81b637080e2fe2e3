#include <string>
#include <vector>

#include "liteie/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return liteie::run_cli(args);
}
