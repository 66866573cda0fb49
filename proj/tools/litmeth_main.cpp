#include "litmeth/cli.hpp"

int main(int argc, char** argv) { return litmeth::cli::run(argc, argv); }
