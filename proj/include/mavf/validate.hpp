#pragma once

#include <string>
#include <vector>

namespace mavf {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Cross-checks the closed-form machinery against slow independent routes:
/// primal update vs gradient descent, mission primal vs gradient descent,
/// batch MAP vs Kalman filter, Gaussian KL vs numerical quadrature.
std::vector<CheckResult> run_validation(unsigned seed = 7);

}  // namespace mavf
