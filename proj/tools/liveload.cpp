#include "liveload/cli.hpp"

int main(int argc, char** argv) { return liveload::run_cli(argc, argv); }
