#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tepps/milp.hpp"

namespace tepps {

enum class MpsFormat { kFixed, kFree };

struct MpsOptions {
  MpsFormat format = MpsFormat::kFixed;
  std::string problem_name = "TEPPS";
};

/// Names as they will appear in the file. Fixed format keeps names of at
/// most 8 characters without blanks and replaces the rest by C<n>/R<n>.
/// Throws ValidationError listing duplicates or collisions.
struct MpsNames {
  std::vector<std::string> columns;
  std::vector<std::string> inequalities;
  std::vector<std::string> equalities;
};

MpsNames mps_names(const MilpProblem& milp, MpsFormat format);

/// Numbers use 12 significant digits.
void write_mps(const MilpProblem& milp, std::ostream& out, const MpsOptions& options = {});
std::string write_mps(const MilpProblem& milp, const MpsOptions& options = {});

}  // namespace tepps
