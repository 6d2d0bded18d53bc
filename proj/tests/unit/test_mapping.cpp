#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "vivo/mapping.hpp"

using namespace vivo;

namespace {

MappingState two_by_three()
{
    MappingState s;
    s.inputs = {{"warmth", "/vivo/warmness", {-1, 1, 5, 200, 3}}, {"detail", "/vivo/detail", {0, 1, 0, 1200, 1}}};
    s.outputs = {{"attack", "/synth/attack"}, {"release", "/synth/release"}, {"resampling_var", "/synth/rv"}};
    s.matrix = RoutingMatrix(2, 3);
    s.matrix.at(0, 0) = 1.0;
    s.matrix.at(0, 1) = 1.0;
    s.matrix.at(1, 2) = 1.0;
    return s;
}

} // namespace

TEST(Scale, Examples)
{
    EXPECT_EQ(scale(0.5, {0, 1, 0, 100, 1}), 50.0);
    EXPECT_EQ(scale(0.5, {0, 1, 0, 100, 3}), 12.5);
    EXPECT_DOUBLE_EQ(scale(1.2, {0, 1, 0, 100, 1}), 120.0);
    EXPECT_EQ(scale(0.5, {0, 1, 0, 100, 3}), oracle::scale(0.5, 0, 1, 0, 100, 3));
}

TEST(Scale, EndpointsExact)
{
    synth::Rng rng(31);
    for (double e : {0.5, 1.0, 3.0}) {
        for (int k = 0; k < 200; ++k) {
            ScalerParams p{rng.uniform(-10, 10), 0, rng.uniform(-500, 500), rng.uniform(-500, 500), e};
            p.in_max = p.in_min + rng.uniform(0.1, 20);
            EXPECT_EQ(scale(p.in_min, p), p.out_min);
            EXPECT_EQ(scale(p.in_max, p), p.out_max);
        }
    }
}

TEST(Scale, MonotoneWhenOutputRises)
{
    synth::Rng rng(32);
    for (double e : {0.5, 1.0, 3.0}) {
        const ScalerParams p{0, 1, -3, 7, e};
        double last = scale(-2.0, p);
        for (double x = -2.0; x <= 3.0; x += 0.01) {
            const double y = scale(x, p);
            EXPECT_GE(y, last);
            last = y;
        }
    }
}

TEST(Scale, SignedPowerBelowRange)
{
    EXPECT_DOUBLE_EQ(scale(-0.5, {0, 1, 0, 100, 3}), -12.5);
    EXPECT_DOUBLE_EQ(scale(-0.25, {0, 1, 0, 100, 0.5}), -50.0);
}

TEST(Scale, MatchesOracle)
{
    synth::Rng rng(33);
    for (int k = 0; k < 1000; ++k) {
        const ScalerParams p{0, 2, 10, -30, rng.uniform(0.2, 4)};
        const double x = rng.uniform(-1, 3);
        EXPECT_NEAR(scale(x, p), oracle::scale(x, p.in_min, p.in_max, p.out_min, p.out_max, p.exponent), 1e-9);
    }
}

TEST(Scale, ValidateRejects)
{
    EXPECT_THROW((ScalerParams{1, 1, 0, 1, 1}.validate()), Error);
    EXPECT_THROW((ScalerParams{0, 1, 0, 1, 0}.validate()), Error);
}

TEST(Route, Linear)
{
    synth::Rng rng(34);
    RoutingMatrix m(5, 4);
    for (double& g : m.gains())
        g = rng.uniform();
    for (int k = 0; k < 1000; ++k) {
        std::vector<double> a(5), b(5), sum(5);
        for (int i = 0; i < 5; ++i) {
            a[i] = rng.uniform(-100, 100);
            b[i] = rng.uniform(-100, 100);
            sum[i] = a[i] + b[i];
        }
        const auto ra = route(m, a), rb = route(m, b), rs = route(m, sum);
        for (int j = 0; j < 4; ++j)
            ASSERT_NEAR(rs[j], ra[j] + rb[j], 1e-9);
    }
}

TEST(Route, ZeroMatrixGivesZeros)
{
    const RoutingMatrix m(3, 2);
    const std::vector<double> x{1, 2, 3};
    EXPECT_EQ(route(m, x), (std::vector<double>{0, 0}));
}

TEST(Route, DimensionMismatch)
{
    const RoutingMatrix m(3, 2);
    const std::vector<double> x{1, 2};
    EXPECT_THROW(route(m, x), Error);
}

TEST(MappingState, ScalesThenRoutes)
{
    const MappingState s = two_by_three();
    const std::vector<double> raw{1.0, 0.5};
    const auto out = s.apply(raw);
    EXPECT_EQ(out[0], 200.0);
    EXPECT_EQ(out[1], 200.0);
    EXPECT_EQ(out[2], 600.0);
}

TEST(MappingState, ValidationErrors)
{
    MappingState s = two_by_three();
    s.matrix.at(0, 0) = 1.5;
    EXPECT_THROW(s.validate(), Error);
    s = two_by_three();
    s.outputs.pop_back();
    EXPECT_THROW(s.validate(), Error);
    s = two_by_three();
    s.outputs[0].address = "synth";
    EXPECT_THROW(s.validate(), Error);
}

TEST(Preset, RecallExactAtZeroHalfOne)
{
    synth::Rng rng(35);
    const MappingState current = two_by_three();
    MappingState other = current;
    for (double& g : other.matrix.gains())
        g = rng.uniform();
    for (MappingInput& in : other.inputs)
        in.scaler = {rng.uniform(-1, 0), rng.uniform(1, 2), rng.uniform(0, 10), rng.uniform(10, 100),
                     rng.uniform(0.5, 3)};
    const Preset target = make_preset("b", other);

    EXPECT_EQ(recall_preset(current, target, 0.0), current);
    EXPECT_EQ(recall_preset(current, target, 1.0), other);

    const MappingState mid = recall_preset(current, target, 0.5);
    for (std::size_t k = 0; k < mid.matrix.gains().size(); ++k)
        EXPECT_EQ(mid.matrix.gains()[k], 0.5 * current.matrix.gains()[k] + 0.5 * other.matrix.gains()[k]);
    for (std::size_t i = 0; i < mid.inputs.size(); ++i) {
        EXPECT_EQ(mid.inputs[i].scaler.out_max,
                  0.5 * current.inputs[i].scaler.out_max + 0.5 * other.inputs[i].scaler.out_max);
        EXPECT_EQ(mid.inputs[i].scaler.exponent,
                  0.5 * current.inputs[i].scaler.exponent + 0.5 * other.inputs[i].scaler.exponent);
    }
}

TEST(Preset, SaveRecallRoundTrip)
{
    const MappingState s = two_by_three();
    const Preset p = make_preset("a", s);
    EXPECT_EQ(recall_preset(s, p, 1.0), s);
    MappingState other = s;
    other.matrix.at(1, 2) = 0.0;
    EXPECT_EQ(recall_preset(other, p, 1.0), s);
}

TEST(Preset, RampProgress)
{
    EXPECT_EQ(ramp_progress(0, 1000), 0.0);
    EXPECT_EQ(ramp_progress(500, 1000), 0.5);
    EXPECT_EQ(ramp_progress(1500, 1000), 1.0);
    EXPECT_EQ(ramp_progress(10, 0), 1.0);
}

TEST(Preset, Incompatible)
{
    const MappingState s = two_by_three();
    Preset p = make_preset("x", s);
    p.matrix = RoutingMatrix(3, 3);
    EXPECT_THROW(recall_preset(s, p, 0.5), Error);
}

TEST(MappingJson, RoundTrip)
{
    const MappingState s = two_by_three();
    const Json j = s;
    EXPECT_EQ(parse_mapping(j), s);
    EXPECT_EQ(Json(parse_mapping(Json::parse(j.dump()))).dump(), j.dump());
}

TEST(MappingJson, Malformed)
{
    EXPECT_THROW(parse_mapping(Json::parse(R"({"inputs": [{"address": "/x"}]})")), Error);
    EXPECT_THROW(parse_mapping(Json::parse(R"({"inputs": [], "outputs": [], "matrix": [[1]]})")), Error);
    EXPECT_THROW(parse_mapping(Json::parse(R"({"matrix": "no"})")), Error);
}

TEST(MappingStore, RampIsInterpolatedLazily)
{
    using Clock = MappingStore::Clock;
    MappingState a = two_by_three();
    MappingState b = a;
    b.matrix.at(1, 0) = 1.0;
    MappingStore store(a, {make_preset("b", b)});
    const auto t0 = Clock::now();
    store.recall("b", 1000.0, t0);
    EXPECT_TRUE(store.ramping());
    EXPECT_DOUBLE_EQ(store.snapshot(t0 + std::chrono::milliseconds(500))->matrix.at(1, 0), 0.5);
    EXPECT_EQ(*store.snapshot(t0 + std::chrono::milliseconds(1000)), b);
    EXPECT_FALSE(store.ramping());
    EXPECT_EQ(*store.snapshot(t0 + std::chrono::milliseconds(2000)), b);
}

TEST(MappingStore, Errors)
{
    MappingStore store(two_by_three());
    EXPECT_THROW(store.recall("missing", 0.0), PresetNotFound);
    Preset bad = make_preset("bad", two_by_three());
    bad.matrix = RoutingMatrix(1, 1);
    store.put_preset(bad);
    EXPECT_THROW(store.recall("bad", 0.0), Error);
}

TEST(MappingStore, SnapshotsAreImmutable)
{
    MappingStore store(two_by_three());
    const auto before = store.snapshot();
    MappingState next = two_by_three();
    next.matrix.at(0, 0) = 0.0;
    store.replace(next);
    EXPECT_EQ(before->matrix.at(0, 0), 1.0);
    EXPECT_EQ(store.snapshot()->matrix.at(0, 0), 0.0);
}
