#include "lace/cli.hpp"

int main(int argc, char** argv) { return lace::run_cli(argc, argv); }
