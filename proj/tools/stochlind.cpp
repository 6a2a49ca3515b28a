#include "stochlind/cli/app.hpp"

int main(int argc, char** argv) { return stochlind::cli::run_cli(argc, argv); }
