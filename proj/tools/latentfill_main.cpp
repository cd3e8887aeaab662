#include "latentfill/cli.hpp"

int main(int argc, char** argv) { return latentfill::cli::run(argc, argv); }
