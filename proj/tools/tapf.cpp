#include "cli.hpp"

int main(int argc, char **argv) { return tapf::cli::run(argc, argv); }
