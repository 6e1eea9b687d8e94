#include "densop/cli.hpp"

int main(int argc, char** argv) { return densop::cli::run(argc, argv); }
