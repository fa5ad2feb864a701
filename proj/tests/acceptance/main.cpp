#include "malab/acceptance.hpp"

#include <cstdlib>
#include <iostream>

// Usage: malab_acceptance [out_dir]
int main(int argc, char** argv) {
  malab::AcceptanceOptions opts;
  if (argc > 1) opts.out_dir = argv[1];
  return malab::run_acceptance(opts, std::cout).all_pass() ? EXIT_SUCCESS : EXIT_FAILURE;
}
