#include "semvb/cli.hpp"

int main(int argc, char** argv) { return semvb::run_cli(argc, argv); }
