#include "magnon_hybrid/cli.hpp"

int main(int argc, char** argv) { return magnon_hybrid::cli::run(argc, argv); }
