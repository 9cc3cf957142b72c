// Finds the noise scale at which Fixed Equal randomisation has power 0.75 for
// the 0.4 effect arm of scenario S4. Prints the grid and the chosen value.
#include <cmath>
#include <cstdlib>
#include <iostream>

#include "radapt/radapt.hpp"

using namespace radapt;

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 10000;
  const int workers = argc > 2 ? std::atoi(argv[2]) : 1;
  const double target = 0.75;
  const auto design = design_fixed_equal();
  const auto effects = scenario("S4").stratum_a;

  double best = 0.0, best_gap = 1.0;
  std::cout << "scale,power_T2\n";
  for (double scale = 0.26; scale <= 0.461; scale += 0.01) {
    const auto model = OutcomeModel::parametric(effects, scale, kDefaultShape);
    const auto r = replicate(design, model, missing_case(0), MissingPolicy{}, {reps, 2024, workers, "S4"});
    std::cout << fmt_double(scale, 2) << "," << fmt_double(r.power, 4) << "\n";
    if (std::abs(r.power - target) < best_gap) {
      best_gap = std::abs(r.power - target);
      best = scale;
    }
  }
  std::cout << "selected scale " << fmt_double(best, 2) << "\n";
  return 0;
}
