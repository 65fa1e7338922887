#include "mss/cli.hpp"

int main(int argc, char** argv) { return mss::cli::run(argc, argv); }
