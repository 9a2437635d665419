#include "rbmi/cli.hpp"

int main(int argc, char** argv) { return rbmi::run_cli(argc, argv); }
