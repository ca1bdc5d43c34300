#include "bois/cli.hpp"

int main(int argc, char** argv) { return bois::cli::main(argc, argv); }
