#include "gelx/harness.hpp"

int main(int argc, char** argv) { return gelx::run_cli(argc, argv); }
