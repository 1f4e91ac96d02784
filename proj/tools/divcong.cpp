#include "divcong/cli.hpp"

int main(int argc, char** argv) { return divcong::run_cli(argc, argv); }
