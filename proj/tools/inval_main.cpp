#include "inval/cli.hpp"

int main(int argc, char** argv) { return inval::cli_run(argc, argv); }
