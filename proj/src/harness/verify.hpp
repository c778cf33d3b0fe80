#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace samdp::harness {

enum class Scale { kQuick, kFull };

struct CheckResult {
    std::string name;
    double margin = 0;  // slack against the check's tolerance; >= 0 passes
    bool passed = false;
    double seconds = 0;
    std::string detail;
};

/**
 * Runs the whole property battery: every module's invariants at the chosen
 * scale, seeded and deterministic. inject_gamma_fault inflates the discount
 * inside the contraction checks; it exists so the battery's own failure
 * path stays tested.
 */
std::vector<CheckResult> run_verification(std::uint64_t seed, Scale scale,
                                          bool inject_gamma_fault = false);

bool all_passed(const std::vector<CheckResult>& results);
std::string render_verification_report(const std::vector<CheckResult>& results);

}  // namespace samdp::harness
