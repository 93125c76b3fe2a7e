#include "hpglm/cli.hpp"

int main(int argc, char** argv) { return hpglm::run_cli(argc, argv); }
