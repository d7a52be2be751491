#include "msym/cli.hpp"

int main(int argc, char** argv) { return msym::cli::run(argc, argv); }
