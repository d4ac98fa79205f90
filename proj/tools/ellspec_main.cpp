#include "ellspec/cli.hpp"

int main(int argc, char** argv) { return ellspec::cli::run(argc, argv); }
