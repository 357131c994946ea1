#include "cohere/cli.hpp"

int main(int argc, char** argv) { return cohere::cli::run(argc, argv); }
