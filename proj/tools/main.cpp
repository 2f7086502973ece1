#include "rltrack/cli.hpp"

int main(int argc, char** argv) { return rltrack::cli_main(argc, argv); }
