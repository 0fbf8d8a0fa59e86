#pragma once

namespace gridstate {

/// Command-line entry point. Exit codes: 0 success, 1 analysis failure
/// (divergence, infeasibility, bad data verdict failures), 2 input error.
int run_cli(int argc, char** argv);

}  // namespace gridstate
