#include "cli_commands.hpp"

int main(int argc, char** argv) { return rrr::cli::run_cli(argc, argv); }
