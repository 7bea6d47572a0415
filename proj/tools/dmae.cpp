#include "dmae/cli/app.hpp"

int main(int argc, char** argv) { return dmae::cli::run(argc, argv); }
