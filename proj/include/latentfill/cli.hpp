#pragma once

#include <iosfwd>
#include <vector>

#include "latentfill/gradcheck.hpp"

namespace latentfill::cli {

/// Exit codes: 0 success, 1 verification failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailure = 1;
inline constexpr int kExitUsageError = 2;

/// Entry point behind main(): dispatches the gen-data / train / inpaint /
/// evaluate / grad-check subcommands.
int run(int argc, const char* const* argv);

/// Renders the gradient-check table and picks the exit code; split out so
/// the reporting path is testable with injected results.
int report_grad_check(std::ostream& os, const std::vector<ad::OpCheckResult>& results,
                      double total_loss_err, double tolerance);

}  // namespace latentfill::cli
