#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "qsm/control.hpp"
#include "qsm/grid.hpp"
#include "qsm/potentials.hpp"

using namespace qsm;

TEST(ControlledHarmonic, DirectSubstitution) {
    const HarmonicPotential h(1.0);
    EXPECT_DOUBLE_EQ(eval_controlled(h, ControlLaw::open_loop(TimeProfile::zero()), 2.0, 3.7), 2.0);
    EXPECT_DOUBLE_EQ(eval_controlled(h, ControlLaw::open_loop(TimeProfile::zero(), 3.0), 1.0, 0.0), 2.0);
    const ControlLaw fb(0.0, TimeProfile::zero(), 10.0, TimeProfile::constant(1.0));
    EXPECT_DOUBLE_EQ(eval_controlled(h, fb, 1.0, 0.42), -4.5);
}

TEST(ControlledHarmonic, ReducesToBareHarmonic) {
    const HarmonicPotential h(1.3);
    const auto v = static_harmonic(1.3);
    for (double x = -5.0; x <= 5.0; x += 0.37) EXPECT_EQ(v(x, 1.0), h(x));
}

TEST(ControlledHarmonic, ForceAndDriveEnterLinearly) {
    const HarmonicPotential h(1.0);
    const ControlLaw c = ControlLaw::open_loop(TimeProfile::constant(0.5)).with_drive({2.0, 1.2});
    const double t = 0.8, x = 1.5;
    EXPECT_NEAR(eval_controlled(h, c, x, t), 0.5 * x * x - (0.5 + 2.0 * std::sin(1.2 * t)) * x, 1e-15);
    // the drive is external: not part of the controller force
    EXPECT_NEAR(c.control_force(x, t), 0.5, 1e-15);
}

TEST(ControlLawInvariants, RejectsNegativeGainAndMissingReference) {
    EXPECT_THROW(ControlLaw(0.0, TimeProfile::zero(), -1.0, TimeProfile::zero()), std::invalid_argument);
    EXPECT_THROW(ControlLaw(0.0, TimeProfile::zero(), 2.0), std::invalid_argument);
    EXPECT_NO_THROW(ControlLaw(0.0, TimeProfile::zero(), 0.0));
    EXPECT_THROW(HarmonicPotential(0.0), std::invalid_argument);
}

TEST(TimeProfileTable, InterpolatesAndClamps) {
    const auto p = TimeProfile::tabulated({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
    EXPECT_DOUBLE_EQ(p(0.5), 1.0);
    EXPECT_DOUBLE_EQ(p(2.0), 1.0);
    EXPECT_DOUBLE_EQ(p(-1.0), 0.0);
    EXPECT_DOUBLE_EQ(p(4.0), 0.0);
    EXPECT_THROW(TimeProfile::tabulated({0.0, 0.0}, {1.0, 2.0}), std::invalid_argument);
    EXPECT_THROW(TimeProfile::tabulated({0.0}, {1.0}), std::invalid_argument);
}

TEST(EffectivePotential, SignProgramSelectsBranches) {
    const auto pair = displaced_pair(1.0, 1.0);
    EXPECT_DOUBLE_EQ(effective_potential(pair, -0.5), pair.branch(false, -0.5));
    EXPECT_DOUBLE_EQ(effective_potential(pair, 0.0), pair.branch(false, 0.0));
    EXPECT_DOUBLE_EQ(effective_potential(pair, 0.5), pair.branch(true, 0.5));
    EXPECT_DOUBLE_EQ(effective_potential(pair, 0.0), 0.5);
}

TEST(EffectivePotential, IdenticalBranchesIgnoreProgram) {
    auto v = [](double x) { return std::cos(x) + x * x; };
    const ProgrammedPair pair(v, v, [](double x) { return std::sin(7.0 * x) > 0.0; });
    for (double x = -3.0; x <= 3.0; x += 0.1) EXPECT_EQ(effective_potential(pair, x), v(x));
}

TEST(EffectivePotential, TotalAndFiniteOnGrid) {
    const Grid g = make_grid(-10, 10, 256);
    for (const auto& program : {sign_program(), constant_program(false), constant_program(true)}) {
        const auto pair = displaced_pair(1.0, 1.0, program);
        for (double x : g.points()) EXPECT_TRUE(std::isfinite(effective_potential(pair, x)));
    }
}

TEST(CoupledPotential, ValuesAndSymmetry) {
    EXPECT_DOUBLE_EQ(coupled_effective(CoupledPotential(1.3, 0.0), 1.0, 1.0), 1.3 * 1.3);
    EXPECT_DOUBLE_EQ(coupled_effective(CoupledPotential(1.0, 1.5), 1.0, 1.0), 1.0);
    const CoupledPotential c(0.9, 0.7);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-4, 4);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng);
        EXPECT_EQ(c(a, b), c(b, a));
    }
    EXPECT_THROW(CoupledPotential(1.0, -0.1), std::invalid_argument);
}

TEST(NormalModes, FrequenciesAndDiagonalization) {
    const auto m0 = normal_modes(CoupledPotential(1.0, 0.0));
    EXPECT_DOUBLE_EQ(m0.sum_mode, 1.0);
    EXPECT_DOUBLE_EQ(m0.diff_mode, 1.0);
    const CoupledPotential c(1.0, 1.5);
    const auto m = normal_modes(c);
    EXPECT_DOUBLE_EQ(m.sum_mode, 1.0);
    EXPECT_DOUBLE_EQ(m.diff_mode, 2.0);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng), b = u(rng);
        const auto [y1, y2] = rotate_modes(a, b);
        const double rotated = 0.5 * m.sum_mode * m.sum_mode * y1 * y1 + 0.5 * m.diff_mode * m.diff_mode * y2 * y2;
        EXPECT_NEAR(coupled_effective(c, a, b) - rotated, 0.0, 1e-12);
        const auto [a2, b2] = rotate_modes(y1, y2);
        EXPECT_NEAR(a2, a, 1e-14);
        EXPECT_NEAR(b2, b, 1e-14);
    }
}

TEST(CouplingLaw, ForcesAndInducedPotential) {
    const auto zero = coupling_law(0.0).forces(1.3, -0.4);
    EXPECT_EQ(zero.first, 0.0);
    EXPECT_EQ(zero.second, 0.0);

    const auto law = coupling_law(1.5);
    const double omega = 1.0;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 50; ++i) {
        const double x1 = u(rng), x2 = u(rng);
        const auto [f1, f2] = law.forces(x1, x2);
        EXPECT_EQ(f1, -f2);
        EXPECT_DOUBLE_EQ(f1, 1.5 * (x2 - x1));
        EXPECT_NEAR(law.induced_potential(omega, x1, x2), coupled_effective(CoupledPotential(omega, 1.5), x1, x2), 1e-12);
        // central difference is exact for a quadratic up to rounding
        const double h = 1e-3;
        const double grad = (law.induced_potential(omega, x1 + h, x2) - law.induced_potential(omega, x1 - h, x2)) / (2 * h);
        const double big_omega2 = omega * omega + 1.5;
        EXPECT_NEAR(-grad, -big_omega2 * x1 + 1.5 * x2, 1e-9);
    }
    EXPECT_THROW(coupling_law(-1.0), std::invalid_argument);
}
