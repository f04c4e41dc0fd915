#include "commands.hpp"

int main(int argc, char** argv) {
  return countseg::cli::run(argc, argv);
}
