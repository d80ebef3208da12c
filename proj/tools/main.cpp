#include "cli.hpp"

int main(int argc, char** argv) { return glearn::cli::main_entry(argc, argv); }
