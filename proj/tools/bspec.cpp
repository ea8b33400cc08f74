#include "birkhoff/cli.hpp"

int main(int argc, char** argv) { return birkhoff::cli::run_main(argc, argv); }
