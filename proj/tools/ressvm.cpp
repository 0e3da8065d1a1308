#include "ressvm/cli.hpp"

int main(int argc, char** argv) { return ressvm::run_cli(argc, argv); }
