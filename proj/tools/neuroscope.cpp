#include "neuroscope/service/cli.hpp"

int main(int argc, char** argv) { return neuroscope::run_cli(argc, argv); }
