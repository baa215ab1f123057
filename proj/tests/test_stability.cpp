#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qsm/control.hpp"
#include "qsm/propagator.hpp"
#include "qsm/stability.hpp"

using namespace qsm;

namespace {

const double kSigma0 = 1.0 / std::numbers::sqrt2;

Grid wide() { return make_grid(-20.0, 20.0, 1024); }

}  // namespace

TEST(EnergyDrift, GroundStateIsStationary) {
    const auto pot = static_harmonic(1.0, 1.25);
    const double w = detuned_frequency(1.0, 1.25);
    const auto wf = gaussian_init(wide(), {0.0, 1.0 / std::sqrt(2.0 * w)});
    const auto tr = evolve(wf, pot, EvolutionSpec{0.005, 5.0}).trajectory;
    const auto d = energy_drift(tr, pot);
    EXPECT_TRUE(d.applicable);
    EXPECT_TRUE(d.relative);
    EXPECT_LT(d.value, 1e-8);
}

TEST(EnergyDrift, DisplacedPacketOverOnePeriod) {
    const auto pot = static_harmonic(1.0, 0.5);
    const double period = 2.0 * std::numbers::pi / detuned_frequency(1.0, 0.5);
    const auto tr = evolve(gaussian_init(wide(), {1.5, kSigma0}), pot, EvolutionSpec::with_steps(period, 4096)).trajectory;
    EXPECT_LT(energy_drift(tr, pot).value, 1e-6);
}

TEST(EnergyDrift, DrivenRunIsNotApplicable) {
    const ControlledHarmonic pot(HarmonicPotential(1.0), ControlLaw::open_loop(TimeProfile::zero()).with_drive({0.5, 1.2}));
    EXPECT_FALSE(pot.autonomous());
    const auto tr = evolve(gaussian_init(wide(), {0.0, kSigma0}), pot, EvolutionSpec{0.01, 3.0}).trajectory;
    const auto d = energy_drift(tr, pot);
    EXPECT_FALSE(d.applicable);
    EXPECT_GT(d.value, 0.0);
}

TEST(EnergyDrift, ZeroInitialEnergyFallsBackToAbsolute) {
    Trajectory tr;
    tr.times = {0.0, 1.0};
    tr.mean_x = {0.0, 0.0};
    tr.energy = {0.0, 0.25};
    const auto d = energy_drift(tr);
    EXPECT_FALSE(d.relative);
    EXPECT_EQ(d.value, 0.25);
    tr.energy.clear();
    EXPECT_THROW(energy_drift(tr), std::invalid_argument);
}

TEST(EnergyDrift, SecondOrderUnderStepRefinement) {
    // squeezed and displaced, so the split error is visible above rounding
    const auto pot = static_harmonic(1.0, 3.0);
    const auto wf = gaussian_init(wide(), {2.0, 0.3});
    const double period = std::numbers::pi;
    auto drift = [&](std::size_t steps) {
        return energy_drift(evolve(wf, pot, EvolutionSpec::with_steps(period, steps, 1)).trajectory).value;
    };
    const double coarse = drift(128), fine = drift(256);
    EXPECT_GE(coarse / fine, 3.0) << coarse << " vs " << fine;
}

TEST(Lyapunov, ConstantCandidateNeverViolates) {
    const auto tr = evolve(gaussian_init(wide(), {1.0, kSigma0}), static_harmonic(1.0), EvolutionSpec{0.01, 6.0}).trajectory;
    LyapunovSpec spec;
    spec.candidate = [](const Observables&, double) { return 3.0; };
    const auto r = lyapunov_verify(spec, tr);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.violations, 0u);
    EXPECT_EQ(r.max_derivative, 0.0);
}

TEST(Lyapunov, EnergyOfAutonomousRunIsFlat) {
    const auto tr = evolve(gaussian_init(wide(), {1.0, kSigma0}), static_harmonic(1.0), EvolutionSpec{5.0 / 4096, 5.0}).trajectory;
    LyapunovSpec spec;
    spec.candidate = [](const Observables& o, double) { return o.energy; };
    const auto r = lyapunov_verify(spec, tr);
    EXPECT_TRUE(r.passed());
    EXPECT_LT(std::abs(r.max_derivative), 1e-6);
}

TEST(Lyapunov, WrongSignCandidateIsCaught) {
    const auto tr = evolve(gaussian_init(wide(), {1.0, kSigma0}), static_harmonic(1.0), EvolutionSpec{0.01, 6.0}).trajectory;
    LyapunovSpec spec;
    spec.candidate = [](const Observables& o, double) { return -o.mean * o.mean; };
    const auto r = lyapunov_verify(spec, tr);
    EXPECT_GT(r.violations, 0u);
    EXPECT_FALSE(r.passed());
    EXPECT_GT(r.violation_fraction(), 0.0);
    EXPECT_TRUE(r.equilibrium_ok);
}

TEST(Lyapunov, MatchedFeedbackTailApproachesTarget) {
    const SteeringProblem prob(1.0, 1.0, 5.0, 5.0);
    const auto tr = ehrenfest_path(1.0, 0.0, HarmonicPotential(1.0), feedback_law(prob, 10.0), EvolutionSpec{5.0 / 4096, 5.0});
    LyapunovSpec spec;
    spec.candidate = [](const Observables& o, double) { return (o.mean - 5.0) * (o.mean - 5.0); };
    spec.equilibrium = 5.0;
    spec.start_time = 3.0;
    spec.mode = DescentMode::envelope;
    spec.region_lo = -10.0;
    spec.region_hi = 10.0;
    const auto r = lyapunov_verify(spec, tr);
    EXPECT_TRUE(r.passed());
    EXPECT_TRUE(r.equilibrium_ok);
}

TEST(Lyapunov, RegionExitIsReported) {
    const auto tr = evolve(gaussian_init(wide(), {1.0, kSigma0}), static_harmonic(1.0), EvolutionSpec{0.01, 6.0}).trajectory;
    LyapunovSpec spec;
    spec.candidate = [](const Observables&, double) { return 0.0; };
    spec.region_lo = 0.0;
    spec.region_hi = 2.0;
    const auto r = lyapunov_verify(spec, tr);
    EXPECT_FALSE(r.stayed_in_region);
    ASSERT_TRUE(r.exit_time.has_value());
    EXPECT_NEAR(*r.exit_time, std::numbers::pi / 2.0, 0.08);  // record spacing
    EXPECT_FALSE(r.passed());
}
