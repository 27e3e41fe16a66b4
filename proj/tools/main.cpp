#include <string>
#include <vector>

#include <snkit/cli.hpp>

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return snkit::cli_main(args);
}
