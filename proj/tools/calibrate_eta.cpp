// Chooses the constant eta for the Trippa-based presets: mean control
// allocation of Control Protected under the global null closest to 1/3.
#include <cstdlib>
#include <iostream>
#include <vector>

#include "radapt/radapt.hpp"

using namespace radapt;

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 10000;
  const int workers = argc > 2 ? std::atoi(argv[2]) : 1;
  auto design = design_control_protected();
  const auto model = OutcomeModel::parametric(scenario("S1").stratum_a);

  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(0.05 * i);
  std::cout << "eta,control_mean,control_sd\n";
  for (double eta : grid) {
    design.rule.eta_schedule = {eta, eta};
    const auto r = replicate(design, model, missing_case(0), MissingPolicy{}, {reps, 2024, workers, "S1"});
    std::cout << fmt_double(eta, 2) << "," << fmt_double(r.alloc_mean[0], 4) << "," << fmt_double(r.alloc_sd[0], 4)
              << "\n";
  }
  const double eta = calibrate_eta(design_control_protected(), model, grid, 1.0 / 3.0, {reps, 2024, workers, "S1"});
  std::cout << "selected eta " << fmt_double(eta, 2) << "\n";
  return 0;
}
