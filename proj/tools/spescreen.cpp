#include "spescreen/cli/pipeline.hpp"

int main(int argc, char** argv) { return spescreen::cli::run_cli(argc, argv); }
