#include "focus3d/geometry/return_map.hpp"
#include "focus3d/stability.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace focus3d;
using namespace focus3d::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

double deg(double d) { return d * kPi / 180.0; }

double dist(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Larger root of x^2 - t x + 1 in absolute value.
double dominant_eigenvalue(double t) { return (std::abs(t) + std::sqrt(t * t - 4.0)) / 2.0; }

}  // namespace

TEST(Reflect, FlatNormalIncidenceNegatesDirection) {
    const FlatPatch f{{0, 0, 1}, {0, 0, -1}, 0.5};
    const Ray out = reflect({{0, 0, 0}, {0, 0, 1}}, f);
    EXPECT_NEAR(out.origin.z, 1.0, 1e-15);
    EXPECT_EQ(out.dir, (Vec3{0, 0, -1}));
}

TEST(Reflect, FlatFortyFiveDegreesSwapsComponents) {
    const FlatPatch f{{1, 0, 0}, normalized({-1, 1, 0}), 0.5};
    const Ray out = reflect({{0, 0, 0}, {1, 0, 0}}, f);
    EXPECT_NEAR(out.dir.x, 0.0, 1e-15);
    EXPECT_NEAR(out.dir.y, 1.0, 1e-15);
    EXPECT_NEAR(out.dir.z, 0.0, 1e-15);
}

TEST(Reflect, CubeCapTurnsEdgeIntoNextEdge) {
    const auto t = build_section3(1.0);
    const Ray out = reflect({{0, 0, 0}, {1, 0, 0}}, t.patches[1]);
    EXPECT_NEAR(dist(out.origin, {1, 0, 0}), 0.0, 1e-12);
    EXPECT_NEAR(dist(out.dir, {0, 1, 0}), 0.0, 1e-15);
}

TEST(Reflect, MissAndTangentialAreErrors) {
    const FlatPatch f{{0, 0, 1}, {0, 0, -1}, 0.1};
    EXPECT_THROW(reflect({{1, 1, 0}, {0, 0, 1}}, f), geometry_error);
    EXPECT_THROW(reflect_direction({1, 0, 0}, {0, 0, 1}), geometry_error);
}

TEST(Reflect, HitPointLiesOnSphere) {
    const auto t = build_section3(1.3);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e-2, 1e-2);
    const auto& cap = std::get<SphereCap>(t.patches[2]);
    for (int k = 0; k < 200; ++k) {
        const Ray r{t.reference_orbit[1].point + Vec3{u(rng), u(rng), u(rng)}, normalized(Vec3{u(rng), 1, u(rng)})};
        const auto hit = intersect(r, cap);
        ASSERT_TRUE(hit);
        EXPECT_NEAR(norm(hit->point - cap.center), 1.0, 1e-12);
    }
}

class Section3 : public ::testing::TestWithParam<double> {};

TEST_P(Section3, ClosesWithFortyFiveDegreeReflections) {
    const double l = GetParam();
    const auto t = build_section3(l);
    ASSERT_EQ(t.patches.size(), 6u);
    ASSERT_EQ(t.reference_orbit.size(), 7u);
    const auto rep = verify_table(t);
    EXPECT_LT(rep.closure_residual, 1e-12);
    ASSERT_EQ(rep.hits.size(), 6u);
    for (const auto& h : rep.hits) {
        EXPECT_TRUE(h.sphere);
        EXPECT_NEAR(h.angle, kPi / 4, 1e-12);
        EXPECT_LT(h.specular_residual, 1e-12);
    }
    for (double d : rep.sphere_to_sphere) EXPECT_NEAR(d, l, 1e-12);
}

TEST_P(Section3, CapsAreUnitSpheresCenteredInward) {
    const double l = GetParam();
    const auto t = build_section3(l);
    for (std::size_t i = 0; i < 6; ++i) {
        const auto& cap = std::get<SphereCap>(t.patches[i]);
        EXPECT_EQ(cap.radius, 1.0);
        EXPECT_NEAR(dist(cap.apex(), t.reference_orbit[i].point), 0.0, 1e-14);
        // The center sits on the domain side: toward the mean of the neighbours.
        const Vec3 prev = t.reference_orbit[(i + 5) % 6].point, next = t.reference_orbit[i + 1].point;
        EXPECT_GT(dot(cap.center - cap.apex(), 0.5 * (prev + next) - cap.apex()), 0.0);
    }
}

INSTANTIATE_TEST_SUITE_P(Lengths, Section3, ::testing::Values(0.5, 1.0, 1.5, 2.0));

TEST(Section3Examples, UnitCubeOrbit) {
    const auto t = build_section3(1.0);
    double length = 0;
    for (std::size_t i = 0; i < 6; ++i) {
        const double seg = dist(t.reference_orbit[i + 1].point, t.reference_orbit[i].point);
        EXPECT_NEAR(seg, 1.0, 1e-15);
        length += seg;
    }
    EXPECT_NEAR(length, 6.0, 1e-14);
    const auto tr = trace_orbit(t, t.reference_start(), 6, {.exclude_first = 0});
    for (const auto& h : tr.hits) {
        const Vec3 n = normal_at(t.patches[h.patch], h.point);
        EXPECT_NEAR(std::abs(dot(h.incoming, n)), 1.0 / std::numbers::sqrt2, 1e-15);
    }
}

TEST(Section3Examples, FullSphereChordIsSqrtTwo) {
    // In a whole unit sphere, a chord leaving at 45 degrees to the normal has
    // length 2 cos(pi/4). l = 1 is shorter, l = 1.5 longer.
    const auto t = build_section3(1.0);
    const auto& cap = std::get<SphereCap>(t.patches[0]);
    const Ray r = t.reference_start();
    const double chord = -2.0 * dot(r.origin - cap.center, r.dir);
    EXPECT_NEAR(chord, std::numbers::sqrt2, 1e-15);
    EXPECT_LT(1.0, chord);
    EXPECT_GT(1.5, chord);
}

TEST(Section3Examples, RejectsNonPositiveLength) {
    EXPECT_THROW(build_section3(0.0), std::invalid_argument);
    EXPECT_THROW(build_section3(-1.0), std::invalid_argument);
}

TEST(Section3Examples, OverlappingCapsAreRejected) {
    EXPECT_THROW(build_section3(0.2), geometry_error);
}

TEST(Section4, PlusPointTwoExample) {
    const double phi = kPi / 4 + 0.2;
    const double l = 1.0 / std::cos(phi) + 0.01;
    const auto t = build_section4(l, phi);
    ASSERT_EQ(t.patches.size(), 12u);
    const auto rep = verify_table(t);
    EXPECT_LT(rep.closure_residual, 1e-10);
    EXPECT_TRUE(rep.alternating);
    for (const auto& h : rep.hits) {
        EXPECT_NEAR(h.angle, h.sphere ? phi : 3 * kPi / 4 - phi, 1e-10);
        EXPECT_LT(h.specular_residual, 1e-12);
    }
    ASSERT_EQ(rep.sphere_to_sphere.size(), 6u);
    for (double d : rep.sphere_to_sphere) EXPECT_NEAR(d, l, 1e-10);
}

TEST(Section4, SixtyTwoDegrees) {
    const double phi = deg(62);
    const double l = 1.0 / std::cos(phi) + 0.05;
    const auto t = build_section4(l, phi);
    const auto rep = verify_table(t);
    EXPECT_LT(rep.closure_residual, 1e-10);
    EXPECT_TRUE(rep.alternating);
    EXPECT_EQ(rep.hits.size(), 12u);
    for (const auto& h : rep.hits) {
        if (h.sphere) {
            EXPECT_NEAR(h.angle, phi, 1e-10);
        }
    }
    for (double d : rep.sphere_to_sphere) EXPECT_NEAR(d, l, 1e-10);
}

TEST(Section4, FlatAngleTurnsCornerByRightAngle) {
    for (double phi = kPi / 4 + 0.01; phi < kPi / 2; phi += 0.05) {
        const double psi = 3 * kPi / 4 - phi;
        EXPECT_GT(psi, kPi / 4);
        EXPECT_LT(psi, kPi / 2);
        EXPECT_NEAR((kPi - 2 * phi) + (kPi - 2 * psi), kPi / 2, 1e-14);
    }
}

TEST(Section4, ConstraintErrorsNameTheViolation) {
    try {
        build_section4(2.0, kPi / 4);
        FAIL() << "expected an angle error";
    } catch (const geometry_error& e) {
        EXPECT_NE(std::string(e.what()).find("angle"), std::string::npos);
    }
    try {
        build_section4(0.3, deg(60));
        FAIL() << "expected an overlap error";
    } catch (const geometry_error& e) {
        EXPECT_NE(std::string(e.what()).find("overlap"), std::string::npos);
    }
    EXPECT_THROW(build_section4(2.0, deg(60), {.detour_fraction = 1.0}), geometry_error);
    EXPECT_THROW(build_section4(-1.0, deg(60)), std::invalid_argument);
}

TEST(Section4, ApproachesCubeTableAsAngleTendsToQuarterPi) {
    const double l = 1.5;
    const auto cube = build_section3(l);
    double prev_gap = 1e9;
    for (double delta : {1e-1, 1e-2, 1e-3}) {
        const auto t = build_section4(l, kPi / 4 + delta);
        double gap = 0;
        for (std::size_t i = 0; i < 6; ++i)
            gap = std::max(gap, dist(t.reference_orbit[2 * i].point, cube.reference_orbit[i].point));
        EXPECT_LT(gap, prev_gap);
        prev_gap = gap;
    }
    EXPECT_LT(prev_gap, 1e-2);
    // The trace is steep in phi here, so compare at the actual angle.
    const double phi = kPi / 4 + 1e-3;
    const auto est = numerical_monodromy(build_section4(l, phi));
    EXPECT_NEAR(std::abs(est.trace_upper), std::abs(trace_value(l, phi)), 1e-3);
    EXPECT_NEAR(trace_value(l, kPi / 4 + 1e-9), trace_value(l, kPi / 4), 1e-6);
}

TEST(TraceOrbit, ReferenceStartReturns) {
    const auto t = build_section3(1.0);
    const auto tr = trace_orbit(t, t.reference_start(), 6, {.exclude_first = 0});
    ASSERT_FALSE(tr.escaped);
    EXPECT_LT(dist(tr.hits.back().point, t.reference_orbit[0].point), 1e-10);
    EXPECT_LT(dist(tr.hits.back().outgoing, t.reference_start().dir), 1e-10);
}

TEST(TraceOrbit, TwelveHitsAlternateOnSection4) {
    const double phi = deg(62);
    const auto t = build_section4(1.0 / std::cos(phi) + 0.05, phi);
    const auto tr = trace_orbit(t, t.reference_start(), 12, {.exclude_first = 0});
    ASSERT_EQ(tr.hits.size(), 12u);
    for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(is_sphere(t.patches[tr.hits[k].patch]), k % 2 == 1) << k;
}

TEST(TraceOrbit, SmallTransverseOffsetStaysClose) {
    const auto t = build_section3(1.0);
    const auto f = section_frame(t);
    const auto ref = trace_orbit(t, t.reference_start(), 6, {.exclude_first = 0});
    for (int axis : {0, 2}) {
        State4 s{};
        s[axis] = 1e-9;
        const auto tr = trace_orbit(t, state_to_ray(f, s), 6, {.exclude_first = 0});
        ASSERT_EQ(tr.hits.size(), 6u);
        for (std::size_t k = 0; k < 6; ++k) {
            EXPECT_EQ(tr.hits[k].patch, ref.hits[k].patch);
            EXPECT_LT(dist(tr.hits[k].point, ref.hits[k].point), 1e-6);
        }
    }
}

TEST(TraceOrbit, EscapeIsFlaggedAndTruncated) {
    const auto t = build_section3(1.0);
    const auto tr = trace_orbit(t, {{5, 5, 5}, {1, 0, 0}}, 5);
    EXPECT_TRUE(tr.escaped);
    EXPECT_TRUE(tr.hits.empty());
    EXPECT_THROW(trace_orbit(t, t.reference_start(), 0), std::invalid_argument);
}

TEST(TraceOrbit, IsDeterministic) {
    const auto t = build_section3(1.5);
    const Ray r = state_to_ray(section_frame(t), {1e-4, -2e-4, 3e-4, 1e-4});
    const auto a = trace_orbit(t, r, 60, {.exclude_first = 0});
    const auto b = trace_orbit(t, r, 60, {.exclude_first = 0});
    ASSERT_EQ(a.hits.size(), b.hits.size());
    for (std::size_t k = 0; k < a.hits.size(); ++k) {
        EXPECT_EQ(a.hits[k].patch, b.hits[k].patch);
        EXPECT_EQ(a.hits[k].point, b.hits[k].point);
        EXPECT_EQ(a.hits[k].outgoing, b.hits[k].outgoing);
    }
}

TEST(Invariants, SpecularAtEveryHitOfRandomOrbits) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e-3, 1e-3);
    for (double l : {0.8, 1.5}) {
        const auto t = build_section3(l);
        const auto f = section_frame(t);
        for (int k = 0; k < 50; ++k) {
            const auto tr = trace_orbit(t, state_to_ray(f, {u(rng), u(rng), u(rng), u(rng)}), 12,
                                        {.exclude_first = 0});
            for (const auto& h : tr.hits) {
                const Vec3 n = normal_at(t.patches[h.patch], h.point);
                EXPECT_NEAR(std::abs(dot(h.incoming, n)), std::abs(dot(h.outgoing, n)), 1e-12);
                EXPECT_NEAR(dot(cross(h.incoming, h.outgoing), n), 0.0, 1e-12);  // coplanar with the normal
            }
        }
    }
}

TEST(Invariants, UnitSpeedOverAMillionReflections) {
    const auto t = build_section3(1.5);
    Ray r = t.reference_start();
    std::size_t exclude = 0;
    double drift = 0;
    std::size_t done = 0;
    while (done < 1'000'000) {
        const auto tr = trace_orbit(t, r, 6000, {.exclude_first = exclude});
        ASSERT_FALSE(tr.escaped) << "after " << done << " reflections";
        for (const auto& h : tr.hits) drift = std::max(drift, std::abs(norm(h.outgoing) - 1.0));
        done += tr.hits.size();
        r = {tr.hits.back().point, tr.hits.back().outgoing};
        exclude = tr.hits.back().patch;
    }
    EXPECT_LT(drift, 1e-10);
}

TEST(Invariants, ReversingTheFinalDirectionRetraces) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1e-4, 1e-4);
    for (double l : {0.6, 1.0, 1.5}) {
        const auto t = build_section3(l);
        const auto fwd = trace_orbit(t, state_to_ray(section_frame(t), {u(rng), u(rng), u(rng), u(rng)}), 6,
                                     {.exclude_first = 0});
        ASSERT_EQ(fwd.hits.size(), 6u);
        const auto& last = fwd.hits.back();
        const auto back = trace_orbit(t, {last.point, -last.incoming}, 5, {.exclude_first = last.patch});
        ASSERT_EQ(back.hits.size(), 5u);
        for (std::size_t k = 0; k < 5; ++k) {
            EXPECT_EQ(back.hits[k].patch, fwd.hits[4 - k].patch);
            EXPECT_LT(dist(back.hits[k].point, fwd.hits[4 - k].point), 1e-9);
        }
    }
}

class Monodromy : public ::testing::TestWithParam<double> {};

TEST_P(Monodromy, MatchesAnalyticBlocksUpToSign) {
    const double l = GetParam();
    const auto est = numerical_monodromy(build_section3(l), 1e-6);
    const double tr = trace_value(l, kPi / 4);
    EXPECT_NEAR(std::abs(est.trace_upper), std::abs(tr), 1e-3);
    EXPECT_NEAR(std::abs(est.trace_lower), std::abs(tr), 1e-3);
    EXPECT_NEAR(est.det, 1.0, 1e-6);
    EXPECT_LT(est.off_block_leakage, 1e-6);
    EXPECT_LT(est.richardson_residual, 1e-4);
    EXPECT_LT(est.fixed_point_residual, 1e-12);
    const auto an = analytic_section_monodromy(l, kPi / 4);
    EXPECT_LT(signed_block_distance(an.block(0, 0), est.m.block(0, 0)), 1e-5);
    EXPECT_LT(signed_block_distance(an.block(1, 1), est.m.block(1, 1)), 1e-5);
    // Lower block is a conjugate of the printed one: same trace.
    EXPECT_NEAR(an.block(1, 1).trace(), full_monodromy(l, kPi / 4).block(1, 1).trace(), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Lengths, Monodromy, ::testing::Values(0.5, 1.0, 1.5, 2.0));

TEST(MonodromyExamples, StableTableTraceSum) {
    const auto est = numerical_monodromy(build_section3(1.5), 1e-6);
    EXPECT_NEAR(std::abs(est.m.trace()), 2 * 0.0246839711994607, 1e-3);
}

TEST(MonodromyExamples, UnstableTableSmallStep) {
    const auto est = numerical_monodromy(build_section3(1.0), 1e-7);
    EXPECT_NEAR(std::abs(est.trace_upper), 7.89480324022694, 1e-3);
    EXPECT_NEAR(std::abs(est.trace_lower), 7.89480324022694, 1e-3);
}

TEST(MonodromyExamples, Section4MatchesGeneralTrace) {
    for (double d : {55.0, 62.0, 70.0}) {
        const double phi = deg(d);
        const double l = 1.0 / std::cos(phi) + 0.05;
        const auto est = numerical_monodromy(build_section4(l, phi), 1e-6);
        EXPECT_NEAR(std::abs(est.trace_upper), std::abs(trace_value(l, phi)), 1e-3) << d;
        EXPECT_NEAR(std::abs(est.trace_lower), std::abs(trace_value(l, phi)), 1e-3) << d;
        EXPECT_NEAR(est.det, 1.0, 1e-6) << d;
    }
}

TEST(MonodromyExamples, StepOutOfRangeRejected) {
    const auto t = build_section3(1.0);
    EXPECT_THROW(numerical_monodromy(t, 1e-3), std::invalid_argument);
    EXPECT_THROW(numerical_monodromy(t, 1e-10), std::invalid_argument);
}

TEST(Growth, StableLinearizedIsBounded) {
    const auto t = build_section3(1.5);
    const auto rec = perturbation_growth(t, 1e-9, 10'000, GrowthMode::linearized);
    ASSERT_EQ(rec.amplification.size(), 10'000u);
    EXPECT_LT(rec.max_amplification, 1e3);
    EXPECT_LE(std::abs(rec.mean_log_growth), std::log(rec.max_amplification) / 10'000 + 1e-12);

    // Oracle: plain powers of the monodromy, no renormalization.
    const auto m = analytic_section_monodromy(1.5, kPi / 4);
    State4 x = random_unit_state(kDefaultSeed);
    for (std::size_t k = 0; k < 10'000; ++k) {
        x = m.apply(x);
        if (k % 997 == 0) {
            EXPECT_NEAR(state_norm(x), rec.amplification[k], 1e-9 * rec.amplification[k]);
        }
    }
}

TEST(Growth, UnstableLinearizedRate) {
    const auto t = build_section3(1.0);
    const auto rec = perturbation_growth(t, 1e-9, 20, GrowthMode::linearized);
    const double rate = std::log(dominant_eigenvalue(trace_value(1.0, kPi / 4)));
    EXPECT_NEAR(rate, 2.049760052743379, 1e-12);
    EXPECT_NEAR(rec.mean_log_growth, rate, 0.05 * rate);
    // Late-time slope is the rate itself.
    EXPECT_NEAR(std::log(rec.amplification[19] / rec.amplification[9]) / 10, rate, 1e-6);
}

TEST(Growth, ParabolicLinearizedIsLinearInPeriods) {
    const auto t = build_section3(std::numbers::sqrt2);
    const auto rec = perturbation_growth(t, 1e-9, 4000, GrowthMode::linearized);
    const double r1 = rec.amplification[1999] / rec.amplification[999];
    const double r2 = rec.amplification[3999] / rec.amplification[1999];
    EXPECT_NEAR(r1, 2.0, 0.05);
    EXPECT_NEAR(r2, 2.0, 0.05);
    EXPECT_LT(rec.mean_log_growth, 5e-3);
}

TEST(Growth, NonlinearStableStaysNear) {
    const auto t = build_section3(1.5);
    const auto rec = perturbation_growth(t, 1e-9, 1000, GrowthMode::nonlinear);
    EXPECT_FALSE(rec.escaped);
    EXPECT_EQ(rec.amplification.size(), 1000u);
    EXPECT_LT(rec.max_amplification, 1e3);
}

TEST(Growth, NonlinearUnstableEscapes) {
    const auto t = build_section3(1.0);
    const auto rec = perturbation_growth(t, 1e-9, 50, GrowthMode::nonlinear);
    EXPECT_TRUE(rec.escaped);
    ASSERT_TRUE(rec.escape_period);
    EXPECT_EQ(*rec.escape_period, rec.amplification.size() + 1);
    // Before escaping, the deviation grows at the linear rate.
    const double rate = std::log(dominant_eigenvalue(trace_value(1.0, kPi / 4)));
    EXPECT_NEAR(std::log(rec.amplification[5] / rec.amplification[2]) / 3, rate, 0.05 * rate);
}

TEST(Growth, SeededAndValidated) {
    const auto t = build_section3(1.5);
    const auto a = perturbation_growth(t, 1e-8, 50, GrowthMode::nonlinear, 3);
    const auto b = perturbation_growth(t, 1e-8, 50, GrowthMode::nonlinear, 3);
    EXPECT_EQ(a.amplification, b.amplification);
    const auto c = perturbation_growth(t, 1e-8, 50, GrowthMode::nonlinear, 4);
    EXPECT_NE(a.amplification, c.amplification);
    EXPECT_THROW(perturbation_growth(t, 0.0, 5, GrowthMode::linearized), std::invalid_argument);
    EXPECT_THROW(perturbation_growth(t, 1e-9, 0, GrowthMode::linearized), std::invalid_argument);
}
