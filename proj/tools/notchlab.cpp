#include "notchlab/cli.hpp"

int main(int argc, char** argv) { return notchlab::run_command(argc, argv); }
