#include "hyline/cli.hpp"

int main(int argc, char** argv) { return hyline::cli_main(argc, argv); }
