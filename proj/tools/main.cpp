#include "dataemb/cli.hpp"

int main(int argc, char** argv) { return dataemb::cli::dispatch(argc, argv); }
