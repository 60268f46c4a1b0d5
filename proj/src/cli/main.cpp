#include "salgan/cli/app.hpp"

int main(int argc, char** argv) {
  return salgan::cli::run(std::vector<std::string>(argv, argv + argc));
}
