#include "seqdetect/cli.hpp"

int main(int argc, char** argv) { return seqdetect::cli::run(argc, argv); }
