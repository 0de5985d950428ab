#include "relex/cli.hpp"

int main(int argc, char **argv) { return relex::cli::run(argc, argv); }
