#include "agg/cli.hpp"

int main(int argc, char** argv) { return agg::cli::parse_and_run(argc, argv); }
