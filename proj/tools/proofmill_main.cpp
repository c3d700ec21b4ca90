#include "proofmill/cli.hpp"

int main(int argc, char** argv) {
  return proofmill::cli::run_main(argc, argv);
}
