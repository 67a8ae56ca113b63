#include "pagpass/cli.hpp"

int main(int argc, char** argv) { return pagpass::cli::run(argc, argv); }
