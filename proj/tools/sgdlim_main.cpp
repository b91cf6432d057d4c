#include "sgdlim/cli.hpp"

int main(int argc, char** argv) { return sgdlim::cli::run(argc, argv); }
