#include "spdectl/cli.hpp"

int main(int argc, char** argv) { return spdectl::cli_main(argc, argv); }
