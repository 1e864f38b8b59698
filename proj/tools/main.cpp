#include <string>
#include <vector>

#include "vpcnet/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return vpcnet::run_cli(args);
}
