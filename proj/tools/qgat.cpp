#include "qgat/cli.hpp"

int main(int argc, char **argv) { return qgat::run_cli(argc, argv); }
