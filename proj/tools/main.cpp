#include "bevgrid/cli.hpp"

int main(int argc, char** argv) { return bevgrid::cli::run(argc, argv); }
