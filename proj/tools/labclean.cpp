#include "labclean/cli.hpp"

int main(int argc, char** argv) { return labclean::run_cli(argc, argv); }
