#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace lffpe {

/// One named check of an invariant suite.
struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0.0; // measured quantity (error, mean, ...)
  double limit = 0.0; // what it was compared against
  std::string detail;
};

/// Eq. 3: 1000 random (x, y, shift, W_r) tuples over M in {1, 2, 4}, plus
/// the self-similarity constant dot(r_x, r_x) = 1/2.
std::vector<CheckResult> verify_shift(std::uint64_t seed);

/// Monte-Carlo mean of dot(r_x, r_y) over `seeds` draws of W_r with
/// |F| = 4096 against (1/2) exp(-|delta|^2 / (2 gamma^2)), for gamma in
/// {1, 4, 100} and |delta| in {0, gamma/2, gamma, 2 gamma}; each check
/// passes within 3 standard errors.
std::vector<CheckResult> verify_kernel(std::uint64_t seed, std::size_t seeds = 100);

/// Analytic vs central-difference gradients of encode for 20 random small
/// configurations (with and without LayerNorm); relative error < 1e-5.
std::vector<CheckResult> verify_grad(std::uint64_t seed);

/// Runs "shift", "kernel", "grad" or "all". Throws std::invalid_argument
/// for any other name.
std::vector<CheckResult> run_suite(std::string_view suite, std::uint64_t seed);

/// One line per check: `suite=... check=... status=pass|fail value=... limit=...`,
/// then a `summary` line. Contains no timings, so it is reproducible.
void write_report(std::ostream &out, const std::vector<CheckResult> &results);

bool all_passed(const std::vector<CheckResult> &results);

} // namespace lffpe
