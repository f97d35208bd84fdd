#include "beliefmap/cli.hpp"

int main(int argc, char** argv) { return bm::cli::run(argc, argv); }
