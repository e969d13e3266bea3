// One SAM step from the oscillation point of a cubic valley: the step is the
// bounce along e1 plus a small move down the gradient of the sharpness.

#include <cstdio>

#include "samdyn/samdyn.hpp"

int main() {
  using namespace samdyn;
  const CubicValleyLoss loss(Spectrum::with_null_directions({1.0, 0.5}), 0.3);
  const SamConfig cfg{0.2, 0.1};
  const DriftReport rep = measure_drift(loss, Vec(2), cfg, +1);

  std::printf("grad lambda_max   (%.9f, %.9f)\n", rep.grad_lambda_max[0], rep.grad_lambda_max[1]);
  std::printf("measured step     (%.9f, %.9f)\n", rep.measured_step[0], rep.measured_step[1]);
  std::printf("predicted bounce  (%.9f, %.9f)\n", rep.predicted_oscillation[0], rep.predicted_oscillation[1]);
  std::printf("predicted drift   (%.9f, %.9f)\n", rep.predicted_drift[0], rep.predicted_drift[1]);
  std::printf("residual %.3g, budget %.3g\n", rep.residual_norm, rep.remainder_budget);
}
