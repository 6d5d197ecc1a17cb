#include <string>
#include <vector>

#include "springsim/cli.hpp"

int main(int argc, char** argv) {
  return springsim::run_cli(std::vector<std::string>(argv, argv + argc));
}
