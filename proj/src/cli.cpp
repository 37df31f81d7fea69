#include "mfmap/cli.hpp"

#include <cstdio>

namespace mfmap {

int run_cli(int, char**) {
    std::fprintf(stderr, "mfmap: not yet implemented\n");
    return 2;
}

}  // namespace mfmap
