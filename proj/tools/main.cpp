#include "sceneflow/cli/cli.hpp"

int main(int argc, char** argv) { return sf::cli::run(argc, argv); }
