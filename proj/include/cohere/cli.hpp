#pragma once

namespace cohere::cli {

/// Entry point for the `cohere` executable. Returns the process exit status;
/// errors are reported on standard error.
int run(int argc, char** argv);

}  // namespace cohere::cli
