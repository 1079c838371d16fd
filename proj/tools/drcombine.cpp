#include "drcombine/cli_io.hpp"

int main(int argc, char** argv) { return drcombine::run_cli(argc, argv); }
