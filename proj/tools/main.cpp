#include "toalab/cli.hpp"

int main(int argc, char** argv) {
    return toalab::cli_main(argc, argv);
}
