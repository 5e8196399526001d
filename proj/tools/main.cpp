#include "cspat/cli.hpp"

int main(int argc, char** argv) { return cspat::cli_main(argc, argv); }
