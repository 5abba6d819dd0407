#include "achart/io.hpp"

int main(int argc, char** argv) { return achart::run_cli(argc, argv); }
