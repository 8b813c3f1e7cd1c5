#include "plriv/cli.hpp"

int main(int argc, char** argv) { return plriv::run_cli(argc, argv); }
