// Copyright 2026 AVSE Project Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <string>
#include <vector>

namespace avse::gradcheck {

struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Finite-difference gradient checks over every layer plus an end-to-end
/// desk-scale audio-visual model. `only` restricts to one component;
/// `corrupt` doubles that component's analytic gradients so the checker's
/// sensitivity can be demonstrated.
std::vector<CheckResult> run_suite(const std::string& only = "",
                                   const std::string& corrupt = "");

bool all_pass(const std::vector<CheckResult>& results);

}  // namespace avse::gradcheck
