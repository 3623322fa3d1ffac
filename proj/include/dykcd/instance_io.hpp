#pragma once

#include <optional>
#include <string>

#include "dykcd/bregman.hpp"
#include "dykcd/geometry.hpp"

namespace dykcd {

struct Instance {
  RegressionProblem problem;
  std::optional<SmoothLoss> loss;  // absent -> quadratic with the problem's y
};

// JSON schema:
//   {"n": .., "p": .., "y": [..],
//    "blocks": [{"cols": p_i, "X_col_major": [..], "penalty": {"type": .., "lambda": ..}}],
//    "loss": {"type": "quadratic"|"logistic", "y": [..]}}   (optional)
// Reals are written with 17 significant digits.
void write_instance_json(std::ostream& os, const Instance& instance);
void write_instance_file(const std::string& path, const Instance& instance);

Instance read_instance_json(std::istream& is);
Instance read_instance_file(const std::string& path);

// Loss for solving the instance: explicit loss if present, else quadratic.
SmoothLoss instance_loss(const Instance& instance);

}  // namespace dykcd
