#include "ffnet/cli.hpp"

int main(int argc, char** argv) { return ffnet::cli::run({argv + 1, argv + argc}); }
