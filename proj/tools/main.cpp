#include "graphdiff/cli.hpp"

int main(int argc, char** argv) { return graphdiff::dispatch(argc, argv); }
