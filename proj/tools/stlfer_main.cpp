#include "stlfer/cli.hpp"

int main(int argc, char** argv) { return stlfer::run_cli(argc, argv); }
