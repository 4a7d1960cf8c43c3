#include "maxpoly/cli.hpp"

int main(int argc, char** argv) { return maxpoly::cli::cli_dispatch(argc, argv); }
