// Runs SAM on a 3-d quadratic and prints where the iterate ends up relative
// to the predicted two-cycle.

#include <cstdio>

#include "samdyn/samdyn.hpp"

int main() {
  using namespace samdyn;
  const QuadraticLoss loss(Spectrum::positive({1.0, 0.5, 0.25}));
  const SamConfig cfg{0.4, 0.1};
  const Trajectory traj = run(loss, Vec{0.8, -0.3, 0.5}, cfg, 3000);
  const CycleReport rep = detect_cycle(traj, 1e-8);

  std::printf("predicted amplitude %.6g\n", rep.amplitude);
  std::printf("converged %s", rep.converged ? "yes" : "no");
  if (rep.converged) std::printf(" at t=%llu, phase %+d", static_cast<unsigned long long>(*rep.t_conv), rep.sign_phase);
  std::printf("\n");
  for (std::size_t k = traj.size() - 4; k < traj.size(); ++k) {
    const auto& r = traj[k];
    std::printf("t=%llu  w=(%.10f, %.3g, %.3g)  J=%.10f\n", static_cast<unsigned long long>(r.t), r.w[0], r.w[1],
                r.w[2], r.J);
  }
}
