#include "cli/commands.hpp"

int main(int argc, char** argv) { return structalign::cli::run(argc, argv); }
