#include "adbs/policy.hpp"

#include <cmath>

#include "adbs/error.hpp"

namespace adbs {

int select_arm(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("select_arm: no scores");
  int best = 0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (!std::isfinite(scores[k])) {
      throw InvalidInput("select_arm: non-finite score for arm " + std::to_string(k));
    }
    if (scores[k] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

}  // namespace adbs
