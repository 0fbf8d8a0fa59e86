#include "gridstate/cli_app.hpp"

int main(int argc, char** argv) { return gridstate::run_cli(argc, argv); }
