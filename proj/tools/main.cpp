#include "cli.hpp"

int main(int argc, char** argv) { return xview::cli::run(argc, argv); }
