#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "qsm/analysis.hpp"
#include "qsm/control.hpp"
#include "qsm/propagator.hpp"

using namespace qsm;

namespace {

const double kSigma0 = 1.0 / std::numbers::sqrt2;
const SteeringProblem kPaper(1.0, 1.0, 5.0, 5.0);
const SteeringProblem kMismatch(1.5, 1.0, 5.0, 5.0);

}  // namespace

TEST(SteeringProblemInvariants, RejectsDegenerateInputs) {
    EXPECT_THROW(SteeringProblem(0.0, 1, 5, 5), std::invalid_argument);
    EXPECT_THROW(SteeringProblem(1.0, 1, 5, 0), std::invalid_argument);
    EXPECT_THROW(SteeringProblem(1.0, NAN, 5, 5), std::invalid_argument);
    EXPECT_GT(SteeringProblem(1.0, 0, 1, 1e-3).denominator(), 0.0);
}

TEST(OptimalForce, PaperAmplitude) {
    EXPECT_NEAR(optimal_force_amplitude(kPaper), 1.789198927026, 1e-11);
    EXPECT_NEAR(optimal_force_amplitude(kPaper), 4.0 * (5.0 - std::cos(5.0)) / (10.0 - std::sin(10.0)), 1e-14);
    const auto f = optimal_force(kPaper);
    EXPECT_NEAR(f(0.0), optimal_force_amplitude(kPaper) * std::sin(5.0), 1e-14);
}

TEST(OptimalForce, VanishesAtHorizon) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    for (int i = 0; i < 20; ++i) {
        const SteeringProblem p(u(rng), u(rng), 5.0 * u(rng), u(rng));
        EXPECT_EQ(optimal_force(p)(p.T()), 0.0);
    }
}

TEST(OptimalForce, BallisticTargetNeedsNoForce) {
    const SteeringProblem p(1.0, 1.0, std::cos(5.0), 5.0);
    const auto f = optimal_force(p);
    for (double t = 0.0; t <= 5.0; t += 0.25) EXPECT_EQ(f(t), 0.0);
}

TEST(OptimalForce, ClosesOntoTarget) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> w(0.3, 3.0), p(-5.0, 5.0), T(0.5, 8.0);
    for (int i = 0; i < 50; ++i) {
        const SteeringProblem prob(w(rng), p(rng), p(rng), T(rng));
        EXPECT_NEAR(analytic_center(prob.p0(), prob.omega_model(), 0.0, optimal_force(prob), prob.T()), prob.p_hat(), 1e-6);
    }
}

TEST(ReferencePath, EndpointsAndClosedForm) {
    const auto ref = reference_path(kPaper);
    EXPECT_DOUBLE_EQ(ref(0.0), 1.0);
    EXPECT_NEAR(ref(5.0), 5.0, 1e-6);
    const auto f = optimal_force(kMismatch);
    const auto ref_m = reference_path(kMismatch);
    for (double t : {0.4, 1.7, 3.3, 5.0})
        EXPECT_NEAR(ref_m(t), analytic_center(1.0, 1.5, 0.0, f, t), 1e-9);
    const auto flat = reference_path(SteeringProblem(1.0, 1.0, std::cos(5.0), 5.0));
    for (double t : {0.0, 1.0, 2.5}) EXPECT_NEAR(flat(t), std::cos(t), 1e-12);
}

TEST(FeedbackLaw, ZeroGainIsOpenLoop) {
    const EvolutionSpec spec{5.0 / 4096, 5.0};
    const HarmonicPotential h(1.0);
    const auto fb = ehrenfest_path(1.0, 0.0, h, feedback_law(kPaper, 0.0), spec);
    const auto ol = ehrenfest_path(1.0, 0.0, h, ControlLaw::open_loop(optimal_force(kPaper)), spec);
    EXPECT_EQ(fb.mean_x, ol.mean_x);
    EXPECT_THROW(feedback_law(kPaper, -0.5), std::invalid_argument);
}

TEST(FeedbackLaw, MatchedModelTracksIdealPathWithIdleFeedback) {
    const EvolutionSpec spec{5.0 / 4096, 5.0};
    const auto ref = reference_path(kPaper);
    for (double alpha : {2.0, 10.0, 50.0}) {
        const auto law = feedback_law(kPaper, alpha);
        const auto tr = ehrenfest_path(1.0, 0.0, HarmonicPotential(1.0), law, spec);
        EXPECT_LT(max_deviation(tr.times, tr.mean_x, [&](double t) { return ref(t); }), 1e-4);
        for (std::size_t i = 0; i < tr.size(); ++i) EXPECT_LT(std::abs(alpha * (ref(tr.times[i]) - tr.mean_x[i])), 1e-3);
    }
}

TEST(FeedbackLaw, MismatchEndpointImprovesWithFeedback) {
    const EvolutionSpec spec{5.0 / 4096, 5.0};
    const HarmonicPotential truth(1.0);
    const double miss0 = std::abs(ehrenfest_path(1.0, 0.0, truth, feedback_law(kMismatch, 0.0), spec).mean_x.back() - 5.0);
    const double miss10 = std::abs(ehrenfest_path(1.0, 0.0, truth, feedback_law(kMismatch, 10.0), spec).mean_x.back() - 5.0);
    EXPECT_LT(miss10, miss0);
}

TEST(ControlCost, NoControlCostsNothing) {
    const auto law = ControlLaw::open_loop(TimeProfile::zero());
    EXPECT_EQ(control_cost(law, open_loop_moments(1.0, kSigma0, 1.0, law), 5.0).J, 0.0);
}

TEST(ControlCost, OpenLoopMatchesClosedForm) {
    const auto law = ControlLaw::open_loop(optimal_force(kPaper));
    const auto rep = control_cost(law, open_loop_moments(1.0, kSigma0, 1.0, law), 5.0);
    const double a = optimal_force_amplitude(kPaper);
    EXPECT_NEAR(rep.J, a * a * (10.0 - std::sin(10.0)) / 4.0, 1e-9);
    EXPECT_NEAR(rep.J, 8.438466557263, 1e-9);
    EXPECT_NEAR(rep.force_term, rep.J, 1e-12);
    EXPECT_EQ(rep.spring_term, 0.0);
    EXPECT_EQ(rep.feedback_term, 0.0);
}

TEST(ControlCost, NeedsSecondMomentForSprings) {
    const auto law = ControlLaw::open_loop(TimeProfile::zero(), 2.0);
    EXPECT_THROW(control_cost(law, [](double) { return Moments{1.0, std::nullopt}; }, 1.0), std::invalid_argument);
    EXPECT_NO_THROW(control_cost(ControlLaw::open_loop(TimeProfile::constant(1.0)),
                                 [](double) { return Moments{1.0, std::nullopt}; }, 1.0));
}

TEST(ControlCost, MismatchOracleValues) {
    const EvolutionSpec spec{5.0 / 4096, 5.0, 1};
    const HarmonicPotential truth(1.0);
    const double expected[] = {20.37158205, 95.71916051, 196.72044630, 3263.60334602};
    const double alphas[] = {0.0, 2.0, 10.0, 50.0};
    for (int i = 0; i < 4; ++i) {
        const auto law = feedback_law(kMismatch, alphas[i]);
        const auto tr = gaussian_moment_path(1.0, kSigma0, truth, law, spec);
        EXPECT_NEAR(control_cost(law, tr).J / expected[i], 1.0, 1e-5) << "alpha " << alphas[i];
    }
}

TEST(ControlCost, GridRunAgreesWithMomentOracle) {
    const auto law = feedback_law(kMismatch, 10.0);
    const ControlledHarmonic pot(HarmonicPotential(1.0), law);
    const EvolutionSpec spec{5.0 / 4096, 5.0};
    auto tr = evolve(gaussian_init(make_grid(-16, 16, 1024), {1.0, kSigma0}), pot, spec).trajectory;
    annotate_cost(tr, law);
    const double j = control_cost(law, tr).J;
    EXPECT_NEAR(tr.cost_accum.back(), j, 1e-9);
    EXPECT_NEAR(j / 196.72044630, 1.0, 1e-3);
    EXPECT_NEAR(tr.force_expect.front(), law.control_force(1.0, 0.0), 1e-9);
}

TEST(Certificate, ZeroPerturbationIsEquality) {
    const auto r = check_perturbation(kPaper, TimeProfile::zero());
    EXPECT_EQ(r.status, TrialStatus::pass);
    EXPECT_NEAR(r.cost, 8.438466557263, 1e-9);
    EXPECT_EQ(r.constraint_residual, 0.0);
}

TEST(Certificate, SeededTrialsAllPass) {
    const auto rep = optimality_certificate(kPaper, 100, 12345);
    EXPECT_EQ(rep.passed(), 100u);
    EXPECT_NEAR(rep.optimal_cost, 8.438466557263, 1e-9);
    for (const auto& t : rep.trials) EXPECT_LT(std::abs(t.constraint_residual), 1e-9);
    const auto again = optimality_certificate(kPaper, 100, 12345);
    for (std::size_t i = 0; i < rep.trials.size(); ++i) EXPECT_EQ(rep.trials[i].cost, again.trials[i].cost);
}

TEST(Certificate, UnprojectedPerturbationIsFlagged) {
    const auto r = check_perturbation(kPaper, random_perturbation(kPaper, 99, false));
    EXPECT_EQ(r.status, TrialStatus::constraint_violation);
    EXPECT_THROW(optimality_certificate(kPaper, 0, 1), std::invalid_argument);
}

TEST(Detuning, Values) {
    EXPECT_DOUBLE_EQ(detuned_frequency(1.3, 0.0), 1.3);
    EXPECT_DOUBLE_EQ(detuned_frequency(1.0, 3.0), 2.0);
    EXPECT_THROW(detuned_frequency(1.0, -1.0), std::invalid_argument);
}

TEST(Detuning, MeasuredOscillationFrequency) {
    const auto ev = evolve(gaussian_init(make_grid(-10, 10, 512), {1.0, 0.5}), static_harmonic(1.0, 3.0),
                           EvolutionSpec{0.002, 10.0, 2});
    EXPECT_NEAR(zero_crossing_frequency(ev.trajectory.times, ev.trajectory.mean_x) / 2.0, 1.0, 0.01);
}
