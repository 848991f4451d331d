#include "chern/cli.hpp"

int main(int argc, char** argv) { return chern::cli::run(argc, argv); }
