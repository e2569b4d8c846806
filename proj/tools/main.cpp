#include "spdope/cli.hpp"

int main(int argc, char** argv) { return spdope::run_cli(argc, argv); }
