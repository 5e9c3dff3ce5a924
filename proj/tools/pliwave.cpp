#include "pliwave/cli.hpp"

int main(int argc, char** argv) { return pliwave::cli_main(argc, argv); }
