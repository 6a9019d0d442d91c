#include "lporl/cli.hpp"

int main(int argc, char** argv) { return lporl::cli_main(argc, argv); }
