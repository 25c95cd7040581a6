#include "flowcast/cli.hpp"

int main(int argc, char** argv) { return flowcast::cli::run(argc, argv); }
