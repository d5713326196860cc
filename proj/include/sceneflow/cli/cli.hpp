#pragma once

namespace sf::cli {

// Entry point for the command-line tool. Exit codes: 0 success, 2 usage
// error, 3 data/validation error, 4 numerical failure.
int run(int argc, const char* const* argv);

}  // namespace sf::cli
