#include "bpoa/cli.hpp"

int main(int argc, char** argv) { return bpoa::run_cli(argc, argv); }
