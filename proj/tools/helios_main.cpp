#include "helios/cli.hpp"

int main(int argc, char** argv) { return helios::cli::run_cli(argc, argv); }
