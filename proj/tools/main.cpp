#include "cli.hpp"

int main(int argc, char** argv) { return scopealign::cli::dispatch(argc, argv); }
