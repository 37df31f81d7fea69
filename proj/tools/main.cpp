#include "mfmap/cli.hpp"

int main(int argc, char** argv) {
    return mfmap::run_cli(argc, argv);
}
