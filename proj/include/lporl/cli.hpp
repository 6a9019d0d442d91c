#pragma once

namespace lporl {

/// Entry point behind the lporl binary. Subcommands: gen-mdp, solve, sweep,
/// coverage, diagnose. Returns 0 on success, 1 on validation/usage errors,
/// 2 on runtime errors.
int cli_main(int argc, const char* const* argv);

}  // namespace lporl
