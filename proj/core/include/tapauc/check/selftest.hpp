#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tapauc::check {

struct CheckOutcome {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// Analytic network gradients of bce, auc_hinge and tapauc against central
/// differences on a 6-input, 3-hidden model and a 10-row batch (dropout off).
CheckOutcome gradient_suite(std::uint64_t seed, double epsilon = 1e-3, double tolerance = 1e-4);

/// Random instances with |P|, |N| <= 50: pairwise losses and gradients within
/// `tolerance` of the double loop, roc_auc exactly equal to enumeration.
CheckOutcome loss_oracle_suite(std::uint64_t seed, int instances = 200, double tolerance = 1e-12);

/// tapauc(alpha = 1) and tapauc during warmup equal approx_auc bitwise; an
/// empty floor(alpha |N|) selects exactly the top negative.
CheckOutcome reduction_identities(std::uint64_t seed);

/// Eval-mode forward against a scalar re-implementation, and row-by-row
/// scoring against whole-batch scoring.
CheckOutcome forward_oracle(std::uint64_t seed, double tolerance = 1e-12);

/// Threshold, confusion and uncertainty-interval identities on random scores.
CheckOutcome evaluation_identities(std::uint64_t seed);

std::vector<CheckOutcome> run_selftest(std::uint64_t seed = 20240601);

}  // namespace tapauc::check
