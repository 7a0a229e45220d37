#include "tflow/cli.hpp"

int main(int argc, char** argv) { return tflow::cli_main(argc, argv); }
