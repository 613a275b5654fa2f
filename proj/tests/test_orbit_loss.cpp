#include "orbitcal/config.hpp"
#include "orbitcal/harness.hpp"
#include "orbitcal/orbit_loss.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace orbitcal;

namespace {

OrbitLoss drag_loss(OrbitConfig oc, std::shared_ptr<const GateModel> model = nullptr) {
  const SystemConfig sys;
  if (!model) model = std::make_shared<PulseGateModel>(sys);
  return OrbitLoss(oc, make_drag_space(default_drag_params(), sys.qubit_frequency), model);
}

double sample_std(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double s = 0.0;
  for (const double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST_CASE("measured populations") {
  CHECK(measure_population(basis_state(0), Target::Ground) == 1.0);
  CHECK(measure_population(basis_state(2), Target::Ground) == 0.0);
  CHECK(measure_population(basis_state(2), Target::Excited) == 0.0);
  QuantumState plus(1.0, 1.0, 0.0);
  plus /= std::sqrt(2.0);
  CHECK(measure_population(plus, Target::Excited) == doctest::Approx(0.5));
}

TEST_CASE("shot sampling") {
  std::mt19937_64 rng(4);
  CHECK(sample_shots(1.0, 37, rng) == 1.0);
  CHECK(sample_shots(0.0, 37, rng) == 0.0);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) sum += sample_shots(0.3, 100, rng);
  CHECK(std::abs(sum / draws - 0.3) < 0.005);
}

TEST_CASE("perfect gates sit on the infidelity floor") {
  OrbitConfig oc;
  const OrbitLoss ideal = drag_loss(oc, std::make_shared<IdealGateModel>());
  const auto e = ideal.evaluate(ideal.space().nominal());
  CHECK(e.loss == std::log(oc.infidelity_floor));
  oc.target = Target::Excited;
  CHECK(drag_loss(oc, std::make_shared<IdealGateModel>())
            .evaluate(ideal.space().nominal())
            .loss == std::log(oc.infidelity_floor));
}

TEST_CASE("without drive the ground target cannot see the error") {
  // Only drift acts, which is diagonal, so |0> keeps its population and the
  // ground-target loss hits the floor although every gate is wrong.
  OrbitConfig oc;
  const OrbitLoss loss = drag_loss(oc);
  std::vector<double> x = loss.space().nominal();
  x[0] = 0.0;
  const OrbitLoss wide = loss.with_space(loss.space().with_bounds(0, -1.0, 2e8));
  CHECK(wide.evaluate(x).loss == std::log(oc.infidelity_floor));
  oc.target = Target::Excited;
  const OrbitLoss excited = drag_loss(oc).with_space(wide.space());
  CHECK(excited.evaluate(x).loss > -1e-6);
}

TEST_CASE("golden loss at the detuned start") {
  const ToolkitConfig cfg;
  const auto problem = make_problem(cfg, "drag");
  // Start of seed index 0 in a campaign with the default seed.
  const Vector x = detuned_start(*problem, 0.05, derive_seed(campaign_run_seed(1, 0), "detuning"));
  CHECK(x[0] == doctest::Approx(193753162.73653674).epsilon(1e-15));
  CHECK(x[1] == doctest::Approx(4.115909310649822e-10).epsilon(1e-15));
  CHECK(x[2] == doctest::Approx(-492866.79559230804).epsilon(1e-12));
  CHECK(problem->evaluate(x, 0, 0) == doctest::Approx(-2.8354696170244873).epsilon(1e-9));
  CHECK(problem->evaluate(problem->nominal(), 0, 0) ==
        doctest::Approx(-6.9352950246954865).epsilon(1e-9));
}

TEST_CASE("loss bounds, determinism and clamping") {
  OrbitConfig oc;
  const OrbitLoss loss = drag_loss(oc);
  const auto& s = loss.space();
  for (const double u : {0.0, 0.2, 0.5, 0.9, 1.0}) {
    const auto x = s.from_unit(std::vector<double>(3, u));
    const auto a = loss.evaluate(x);
    CHECK(a.loss >= std::log(oc.infidelity_floor));
    CHECK(a.loss <= 0.0);
    CHECK(loss.evaluate(x).loss == a.loss);
  }
  std::vector<double> outside = s.nominal();
  outside[0] = s.upper()[0] * 3;
  const auto e = loss.evaluate(outside, 5);
  CHECK(e.clamped == 1);
  CHECK(e.x[0] == s.upper()[0]);
  CHECK(e.eval_index == 5);
}

TEST_CASE("more sequences reduce the spread across sequence draws") {
  std::vector<double> few, many;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    OrbitConfig oc;
    oc.sequence_seed = seed;
    oc.num_sequences = 10;
    const OrbitLoss a = drag_loss(oc);
    const auto x = a.space().from_unit(std::vector<double>{0.6, 0.4, 0.55});
    few.push_back(a.evaluate(x).loss);
    oc.num_sequences = 40;
    many.push_back(drag_loss(oc).evaluate(x).loss);
  }
  CHECK(sample_std(many) < sample_std(few));
}

TEST_CASE("resampled sequences depend on the noise stream") {
  OrbitConfig oc;
  oc.resample_sequences = true;
  oc.num_sequences = 3;
  const OrbitLoss loss = drag_loss(oc);
  const auto x = loss.space().from_unit(std::vector<double>{0.6, 0.4, 0.55});
  CHECK(loss.evaluate(x, 1, 7).loss == loss.evaluate(x, 1, 7).loss);
  CHECK(loss.evaluate(x, 1, 7).loss != loss.evaluate(x, 2, 7).loss);
}

TEST_CASE("landscape scans") {
  OrbitConfig oc;
  oc.num_sequences = 2;
  oc.sequence_length = 5;
  const OrbitLoss loss = drag_loss(oc);
  const auto& nom = loss.space().nominal();
  const Landscape one = landscape_scan(loss, "amplitude", std::vector{nom[0]}, "drag_coeff",
                                       std::vector{nom[1]});
  CHECK(one.loss == std::vector{loss.evaluate(nom).loss});

  const std::vector<double> amps = {0.5 * nom[0], nom[0], 1.5 * nom[0]};
  const std::vector<double> drags = {-nom[1], 2 * nom[1]};
  const Landscape ab = landscape_scan(loss, "amplitude", amps, "drag_coeff", drags);
  const Landscape ba = landscape_scan(loss, "drag_coeff", drags, "amplitude", amps);
  for (std::size_t i = 0; i < amps.size(); ++i) {
    for (std::size_t j = 0; j < drags.size(); ++j) CHECK(ab.at(i, j) == ba.at(j, i));
  }
  std::ostringstream os;
  ab.write_csv(os);
  CHECK(os.str().rfind("amplitude,drag_coeff,loss\n", 0) == 0);
  CHECK_THROWS(landscape_scan(loss, "amplitude", std::vector<double>{}, "drag_coeff", drags));
  CHECK_THROWS(landscape_scan(loss, "width", amps, "drag_coeff", drags));
}

TEST_CASE("local minima count") {
  CHECK(count_local_minima(std::vector<double>{3, 2, 1, 2, 3}) == 1);
  CHECK(count_local_minima(std::vector<double>{3, 1, 1, 1, 2, 0, 4}) == 2);
  CHECK(count_local_minima(std::vector<double>{1, 2, 3}) == 0);
  CHECK(count_local_minima(std::vector<double>{}) == 0);
}
