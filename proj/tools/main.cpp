#include "p2plearn/cli.hpp"

int main(int argc, char** argv) { return p2plearn::run_cli(argc, argv); }
