#include "evqr/cli.hpp"

int main(int argc, char** argv) { return evqr::cli::run(argc, argv); }
