#include "adprog/cli.hpp"

int main(int argc, char** argv) { return adprog::cli::run(argc, argv); }
