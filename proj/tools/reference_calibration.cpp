// Finds the DRAG parameters that best implement the atomic gates on the
// default three-level system. The printed values are the toolkit's nominal
// pulse (see default_drag_params()).

#include "orbitcal/optimizers.hpp"
#include "orbitcal/orbit_loss.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

using namespace orbitcal;

namespace {

double mean_infidelity(const PulseGateModel& model, const DragParams& p) {
  const GateUnitaries u = model.unitaries(p);
  double total = 0.0;
  int count = 0;
  for (const AtomicGate g : {AtomicGate::X90p, AtomicGate::Y90p, AtomicGate::X180, AtomicGate::Y180}) {
    total += 1.0 - gate_fidelity(u[static_cast<std::size_t>(g)], ideal_su2(g));
    ++count;
  }
  return total / count;
}

}  // namespace

int main() {
  const SystemConfig sys;
  const PulseGateModel model(sys);
  DragParams p;
  p.drive_freq = sys.qubit_frequency;

  // Rotating-wave guess: the pulse area sets the rotation angle.
  const int n = 20000;
  double area = 0.0;
  for (int k = 0; k < n; ++k) area += gaussian_envelope((k + 0.5) * p.gate_time / n, p);
  area *= p.gate_time / n;
  const double a0 = 0.5 * std::numbers::pi / area;
  std::printf("rwa amplitude guess %.17g rad/s\n", a0);

  // Search (amplitude, drag_coeff, detuning) in scaled units.
  const double a_scale = a0;
  const double eta_scale = 1.0 / std::abs(2.0 * std::numbers::pi * sys.anharmonicity);
  const double det_scale = 1e6;
  auto unpack = [&](const Vector& x) {
    DragParams q = p;
    q.amplitude = a_scale * x[0];
    q.drag_coeff = eta_scale * x[1];
    q.drive_freq = sys.qubit_frequency + det_scale * x[2];
    return q;
  };

  Vector start{1.0, 0.0, 0.0};
  double best = 1.0;
  for (int round = 0; round < 4; ++round) {
    NelderMead nm(NelderMeadParams{round == 0 ? 0.2 : 0.01}, start,
                  Bounds::uniform(3, -10.0, 10.0), 0);
    while (nm.evals_used() < 600) {
      const auto batch = nm.ask();
      std::vector<double> f;
      for (const auto& x : batch) f.push_back(std::log(mean_infidelity(model, unpack(x))));
      nm.tell(batch, f);
    }
    start = nm.recommend();
    best = std::exp(nm.best_loss());
    std::printf("round %d: x = (%.12g, %.12g, %.12g), mean infidelity %.6g\n", round, start[0],
                start[1], start[2], best);
  }
  const DragParams q = unpack(start);
  std::printf("amplitude  = %.17g\n", q.amplitude);
  std::printf("drag_coeff = %.17g\n", q.drag_coeff);
  std::printf("detuning   = %.17g\n", q.drive_freq - sys.qubit_frequency);
  const GateUnitaries u = model.unitaries(q);
  for (const AtomicGate g : kAtomicGates) {
    std::printf("%-5s fidelity %.12f\n", std::string(to_string(g)).c_str(),
                gate_fidelity(u[static_cast<std::size_t>(g)], ideal_su2(g)));
  }
  return 0;
}
