#include "mcflab/cli.hpp"

int main(int argc, char** argv) { return mcflab::cli::dispatch(argc, argv); }
