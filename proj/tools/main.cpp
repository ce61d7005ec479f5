#include "sparsefn/cli.hpp"

int main(int argc, char** argv) { return sparsefn::cli::run(argc, argv); }
