#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "varcalc/mechred.hpp"

using namespace varcalc;
using namespace varcalc::mech;

namespace {

const Tolerances& tol = tolerances();

PhasePoint pt(Vec q, Vec p) { return {std::move(q), std::move(p)}; }

// circular Kepler orbit of radius 1 in the xy plane
PhasePoint circular() { return pt({1, 0, 0}, {0, 1, 0}); }

PhasePoint random_point(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return pt({n(rng), n(rng), n(rng)}, {n(rng), n(rng), n(rng)});
}

std::string code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

}  // namespace

TEST(Momentum, CrossProduct) {
    Vec3 J = momentum(circular());
    EXPECT_EQ(J, (Vec3{0, 0, -1}));
    EXPECT_EQ(momentum(pt({1, 2, 3}, {2, 4, 6})), (Vec3{0, 0, 0}));
    EXPECT_EQ(casimir(circular()), 1);
    EXPECT_EQ(code_of([] { momentum(pt({1, 0}, {0, 1})); }), "DimensionMismatch");
    EXPECT_EQ(code_of([] { casimir(pt({1, 0}, {0, 1})); }), "DimensionMismatch");
}

TEST(Momentum, Equivariance) {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 100; ++k) {
        PhasePoint x = random_point(rng);
        Mat3 O = random_rotation(rng);
        Vec3 J = momentum(x), JO = momentum(rotate(O, x));
        for (int i = 0; i < 3; ++i) {
            double OJ = O[i][0] * J[0] + O[i][1] * J[1] + O[i][2] * J[2];
            EXPECT_NEAR(JO[i], OJ, tol.invariance);
        }
        EXPECT_NEAR(casimir(rotate(O, x)), casimir(x), tol.invariance * 10);
    }
}

TEST(Flow, FreeParticle) {
    MechSystem s = free_particle(3, 2);
    PhasePoint x0 = pt({1, -1, 0.5}, {0.3, 0.2, -0.7});
    Trajectory tr = flow(s, x0, 5, 1e-3);
    for (size_t k = 0; k < tr.x.size(); k += 250)
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(tr.x[k].q[i], x0.q[i] + tr.t[k] * x0.p[i] / 2, tol.free_flow);
    EXPECT_EQ(code_of([&] { flow(s, x0, 1, 0); }), "InvalidStep");
}

TEST(Flow, CircularKepler) {
    MechSystem s = central(kepler());
    Trajectory tr = flow(s, circular(), 10, 1e-3);
    for (const auto& x : tr.x) EXPECT_NEAR(reduce_so3(x).r, 1, tol.circular);
}

TEST(Flow, HarmonicPeriod) {
    MechSystem s = central(harmonic());
    Trajectory tr = flow(s, pt({1, 0, 0}, {0, 0, 0}), 9, 1e-3);
    // sign changes of q_1 by linear interpolation
    std::vector<double> down;
    for (size_t k = 1; k < tr.x.size(); ++k) {
        double a = tr.x[k - 1].q[0], b = tr.x[k].q[0];
        if ((a > 0) != (b > 0)) down.push_back(tr.t[k - 1] + (tr.t[k] - tr.t[k - 1]) * a / (a - b));
    }
    ASSERT_GE(down.size(), 3u);
    // crossings at pi/2 and 5pi/2 are one period apart; the error is the interpolation error
    EXPECT_NEAR(down[2] - down[0], 2 * std::numbers::pi, tol.period);
}

TEST(Flow, BlowUpIsReported) {
    MechSystem s = free_particle(1);
    s.gradV = [](const Vec& q) { return Vec{-q[0] * q[0] * q[0] * 1e6}; };
    EXPECT_EQ(code_of([&] { flow(s, pt({10}, {0}), 10, 0.1); }), "NonFiniteState");
}

TEST(Flow, ParallelBatchKeepsOrder) {
    MechSystem s = central(kepler());
    std::vector<PhasePoint> xs = {circular(), pt({1.5, 0, 0}, {0, 0.6, 0.1}), pt({0, 2, 0}, {-0.5, 0, 0.2})};
    auto all = flow_all(s, xs, 1, 1e-3);
    ASSERT_EQ(all.size(), xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        Trajectory one = flow(s, xs[i], 1, 1e-3);
        EXPECT_EQ(all[i].x.back().q, one.x.back().q);
    }
}

TEST(Conservation, KeplerRK4) {
    MechSystem s = central(kepler());
    for (PhasePoint x0 : {circular(), pt({1, 0, 0}, {0, 1.2, 0.3}), pt({0.8, 0.4, -0.2}, {-0.3, 0.9, 0.5})}) {
        DriftReport d = check_conservation(s, flow(s, x0, 10, 1e-3));
        EXPECT_LE(d.max_J(), tol.conservation);
        EXPECT_LE(d.casimir, tol.casimir);
    }
}

TEST(Conservation, BrokenRotationDrifts) {
    MechSystem s = perturbed(central(kepler()), 0.05, 0);
    EXPECT_TRUE(s.generators.empty());
    // torque -eps q_2 on J_3 with q_2(0) = 1: drift eps t at early times
    PhasePoint x0 = pt({0, 1, 0}, {-1, 0, 0});
    DriftReport d1 = check_conservation(s, flow(s, x0, 0.1, 1e-3));
    DriftReport d2 = check_conservation(s, flow(s, x0, 0.2, 1e-3));
    EXPECT_GT(d1.max_J(), 100 * tol.conservation);
    EXPECT_NEAR(d2.J[2] / d1.J[2], 2, 0.05);
    EXPECT_NEAR(d1.J[2], 0.05 * 0.1, 1e-4);
    EXPECT_LE(d2.H, tol.conservation);
}

TEST(Conservation, LeapfrogEnergyIsBounded) {
    MechSystem s = central(harmonic());
    const double period = 2 * std::numbers::pi;
    Trajectory a = flow(s, pt({1, 0, 0}, {0, 0.5, 0}), 100 * period, 0.05, Integrator::Leapfrog, 7);
    Trajectory b = flow(s, pt({1, 0, 0}, {0, 0.5, 0}), 10000 * period, 0.05, Integrator::Leapfrog, 7);
    double da = check_conservation(s, a).H, db = check_conservation(s, b).H;
    // the shadow Hamiltonian keeps the error at O(dt^2) with no secular growth
    EXPECT_LE(db, 1e-3);
    EXPECT_LE(db, 1.5 * da);
    Trajectory c = flow(s, pt({1, 0, 0}, {0, 0.5, 0}), 100 * period, 0.05, Integrator::RK4);
    EXPECT_GT(check_conservation(s, c).H, 0);
}

TEST(Reduction, Formulas) {
    ReducedState r = reduce_so3(circular());
    EXPECT_EQ(r.r, 1);
    EXPECT_EQ(r.pr, 0);
    EXPECT_EQ(r.ell, 1);
    EXPECT_FALSE(r.singular);
    EXPECT_TRUE(reduce_so3(pt({1, 2, 3}, {-2, -4, -6})).singular);
    EXPECT_EQ(code_of([] { reduce_so3(pt({0, 0, 0}, {1, 0, 0})); }), "OriginSingularity");
}

TEST(Reduction, FibersAreOrbits) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 100; ++k) {
        PhasePoint x = random_point(rng);
        ReducedState a = reduce_so3(x), b = reduce_so3(rotate(random_rotation(rng), x));
        EXPECT_NEAR(a.r, b.r, tol.invariance * 10);
        EXPECT_NEAR(a.pr, b.pr, tol.invariance * 10);
        EXPECT_NEAR(a.ell, b.ell, tol.invariance * 10);
    }
}

TEST(Reduction, ReducedFlow) {
    MechSystem kep = central(kepler());
    for (const auto& x : reduced_flow(kep, reduce_so3(circular()), 10, 1e-3).x) EXPECT_NEAR(x.r, 1, tol.circular);

    MechSystem free = free_particle();
    ReducedTrajectory f = reduced_flow(free, {1, 0, 1}, 1, 1e-3);
    for (size_t k = 1; k < f.x.size(); ++k) {
        EXPECT_GT(f.x[k].r, f.x[k - 1].r);
        EXPECT_GT(f.x[k].pr, 0);
    }
    EXPECT_EQ(code_of([&] { reduced_flow(kep, {0, 0, 1}, 1, 1e-3); }), "OriginSingularity");
    EXPECT_EQ(code_of([&] { reduced_flow(kep, reduce_so3(pt({1, 0, 0}, {1, 0, 0})), 1, 1e-3); }),
              "OriginSingularity");
}

TEST(Reduction, CommutesWithFlow) {
    for (const MechSystem& s : {central(kepler()), central(harmonic())})
        for (PhasePoint x0 : {circular(), pt({1, 0, 0}, {0.2, 1.1, 0.3}), pt({0.5, 1, -0.4}, {0.3, -0.2, 0.8})})
            EXPECT_LE(commuting_defect(s, x0, 10, 1e-3), tol.commuting) << s.name;
}

TEST(Reduction, SectorsAreKept) {
    MechSystem s = central(kepler());
    std::vector<PhasePoint> xs = {pt({1, 0, 0}, {0, 0.5, 0}), pt({1, 0, 0}, {0, 1, 0}), pt({1, 0, 0}, {0.1, 1.2, 0})};
    auto all = flow_all(s, xs, 10, 1e-3);
    for (size_t i = 0; i < xs.size(); ++i) {
        double l0 = reduce_so3(xs[i]).ell;
        for (const auto& x : all[i].x) EXPECT_NEAR(reduce_so3(x).ell, l0, tol.conservation);
    }
}

TEST(Reduction, BrokenSymmetryHasNoReduction) {
    MechSystem s = perturbed(central(kepler()), 0.1);
    EXPECT_EQ(code_of([&] { reduced_flow(s, {1, 0, 1}, 1, 1e-3); }), "NotInvariant");
}

TEST(KKS, Pairing) {
    EXPECT_EQ(kks_pairing<double>({0, 0, 1}, {1, 0, 0}, {0, 1, 0}), 1);
    EXPECT_EQ(kks_pairing<double>({0, 0, 0}, {1, 2, 3}, {4, 5, 6}), 0);
    // the hat map intertwines the cross product with the commutator
    Mat3 c = commutator(hat({1, 0, 0}), hat({0, 1, 0}));
    EXPECT_EQ(vee(c), (Vec3{0, 0, 1}));

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> u(-9, 9);
    auto q = [&] { return frac(u(rng), 10 + u(rng)); };
    for (int k = 0; k < 200; ++k) {
        std::array<Rational, 3> mu{q(), q(), q()}, xi{q(), q(), q()}, eta{q(), q(), q()};
        EXPECT_EQ(kks_pairing(mu, xi, eta), -kks_pairing(mu, eta, xi));
        EXPECT_EQ(kks_pairing(mu, xi, xi), 0);
    }
    // vanishes when [xi, eta] is orthogonal to mu
    EXPECT_EQ(kks_pairing<double>({1, 0, 0}, {1, 0, 0}, {0, 1, 0}), 0);
}
