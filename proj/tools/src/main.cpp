#include <iostream>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "dinozaur/cli/commands.hpp"

int main(int argc, char** argv) {
#if defined(__GLIBC__)
  // Tapes allocate and free many field-sized buffers per sample; keeping them
  // on the heap instead of fresh mmaps avoids page-fault churn.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
  std::vector<std::string> args(argv + 1, argv + argc);
  return dinozaur::cli::run(args, std::cout, std::cerr);
}
