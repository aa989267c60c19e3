#include "thinpaint/cli/commands.hpp"

int main(int argc, char** argv) { return thinpaint::cli::run(argc, argv); }
