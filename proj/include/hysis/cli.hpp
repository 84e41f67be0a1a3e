#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hysis::cli {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kValidation = 2,
    kNotIdentifiable = 3,
};

/// Runs one subcommand. `args` excludes the program name.
///
///   simulate --scenario F --mode {ct|dt|sde} [--substeps K] [--sigma S] [--seed N] --out F
///   identify --traj F --schedule F
///   estimate --traj F --schedule F [--truth F] [--lenient]
///   fit      --data F --updates F --population N [--from D --to D] [--smooth7]
///   forecast --params F --x0 X --horizon K
///   study    --plan F --out-dir D [--trials N] [--seed N]
///   replay   --manifest F
///
/// File outputs get a `<output>.manifest.json` next to them recording the
/// arguments, input digests and timing; `replay` re-runs such a manifest.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace hysis::cli
