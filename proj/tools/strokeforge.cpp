#include "strokeforge/cli.hpp"

int main(int argc, char** argv) { return strokeforge::cli_main(argc, argv); }
