#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace moptn;

namespace {

CausalNetwork network(std::size_t N, std::vector<Edge> edges, DelayGrid grid = DelayGrid::range(10, 100, 10))
{
    CausalNetwork n;
    n.channels = N;
    n.params.delays = std::move(grid);
    n.edges = std::move(edges);
    return n;
}

Edge edge(std::size_t s, std::size_t t, std::size_t d) { return {s, t, d, 1.0, 1.0, 0.5}; }

GroundTruth truth(std::vector<TrueEdge> e) { return {std::move(e), "test"}; }

// Two AR maps; channel 1 drives channel 0 at lag 2 from sample `onset` on.
MultivariateSeries switch_on_recording(std::size_t T, std::size_t onset, double fs, std::uint64_t seed)
{
    Rng rng(seed);
    Matrix<double> x(T, 2, 0.0);
    for (std::size_t t = 2; t < T; ++t) {
        x(t, 1) = ar_map(x(t - 1, 1)) + 0.4 * rng.normal();
        x(t, 0) = ar_map(x(t - 1, 0)) + 0.4 * rng.normal();
        if (t >= onset) x(t, 0) += 1.5 * x(t - 2, 1);
    }
    return MultivariateSeries(std::move(x), fs);
}

InferenceParams short_params()
{
    InferenceParams p;
    p.embedding = {3, 1};
    p.delays = DelayGrid::range(1, 5);
    return p;
}

}  // namespace

TEST(Score, ExactMatch)
{
    auto c = score(network(4, {edge(0, 1, 40), edge(2, 3, 40)}), truth({{0, 1, 40}, {2, 3, 40}}), true);
    EXPECT_EQ(c.tp, 2u);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
    EXPECT_EQ(c.tp + c.fp + c.fn + c.tn, 4u * 3u * 10u);
}

TEST(Score, WrongDelayIsMissAndFalseAlarm)
{
    auto net = network(4, {edge(0, 1, 50)});
    auto c = score(net, truth({{0, 1, 40}}), true);
    EXPECT_EQ(c.fn, 1u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.tp, 0u);
    auto pair = score(net, truth({{0, 1, 40}}), false);
    EXPECT_EQ(pair.tp, 1u);
    EXPECT_EQ(pair.tp + pair.fp + pair.fn + pair.tn, 12u);
}

TEST(Score, MultipleDelaysOfOnePairCollapseWhenPairScored)
{
    auto c = score(network(3, {edge(0, 1, 10), edge(0, 1, 20)}), truth({{0, 1, std::nullopt}}), false);
    EXPECT_EQ(c.tp, 1u);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.tn, 5u);
}

TEST(Score, OffGridTruthStaysUniverseConsistent)
{
    auto c = score(network(3, {}), truth({{0, 1, 45}}), true);
    EXPECT_EQ(c.fn, 1u);
    EXPECT_EQ(c.tn, 60u);
}

TEST(Score, OrderDoesNotMatter)
{
    std::vector<Edge> e{edge(0, 1, 40), edge(2, 0, 10), edge(3, 1, 40), edge(1, 2, 90)};
    auto g = truth({{0, 1, 40}, {3, 1, 20}, {1, 2, 90}});
    auto a = score(network(4, e), g, true);
    std::reverse(e.begin(), e.end());
    std::reverse(g.edges.begin(), g.edges.end());
    EXPECT_EQ(a, score(network(4, e), g, true));
}

TEST(Score, Errors)
{
    EXPECT_THROW(score(network(3, {edge(0, 5, 10)}), truth({}), true), ChannelMismatch);
    EXPECT_THROW(score(network(3, {}), truth({{4, 0, 10}}), true), ChannelMismatch);
    EXPECT_THROW(score(network(3, {}), truth({{0, 1, std::nullopt}}), true), InvalidParameter);
}

TEST(Metrics, Examples)
{
    auto m = metrics({9, 0, 0, 100});
    EXPECT_DOUBLE_EQ(*m.f1, 1.0);
    EXPECT_DOUBLE_EQ(*m.tpr, 1.0);
    EXPECT_DOUBLE_EQ(*m.fpr, 0.0);
    EXPECT_DOUBLE_EQ(*metrics({0, 2, 1, 10}).f1, 0.0);
    EXPECT_NEAR(*metrics({8, 2, 1, 10}).f1, 8 / 9.5, 1e-15);
    EXPECT_DOUBLE_EQ(*metrics({3, 0, 1, 10}).tpr, 0.75);
}

TEST(Metrics, UndefinedRatiosAreEmpty)
{
    auto m = metrics({0, 0, 0, 0});
    EXPECT_FALSE(m.tpr);
    EXPECT_FALSE(m.fpr);
    EXPECT_FALSE(m.f1);
    EXPECT_TRUE(metrics({0, 0, 0, 5}).fpr.has_value());
}

TEST(Metrics, StayInUnitInterval)
{
    Rng rng(71);
    for (int i = 0; i < 1000; ++i) {
        ConfusionCounts c{rng.below(20), rng.below(20), rng.below(20), rng.below(200)};
        auto m = metrics(c);
        for (const auto& v : {m.tpr, m.fpr, m.f1})
            if (v) {
                EXPECT_GE(*v, 0.0);
                EXPECT_LE(*v, 1.0);
            }
    }
}

TEST(Sweep, SingleCellSingleRealization)
{
    SweepSpec s;
    s.R = 1;
    s.grid.T = {3000};
    auto r = sweep(s);
    ASSERT_EQ(r.cells.size(), 1u);
    const auto& c = r.cells[0];
    ASSERT_EQ(c.counts.size(), 1u);
    EXPECT_TRUE(c.errors.empty());
    EXPECT_EQ(c.seeds.size(), 1u);
    auto m = metrics(c.counts[0]);
    EXPECT_DOUBLE_EQ(*c.tpr.mean, *m.tpr);
    EXPECT_DOUBLE_EQ(*c.tpr.std, 0.0);
    EXPECT_EQ(c.counts[0].tp + c.counts[0].fp + c.counts[0].fn + c.counts[0].tn, 9u * 8u * 10u);
}

TEST(Sweep, GrowingTheGridKeepsExistingCells)
{
    SweepSpec small;
    small.R = 2;
    small.seed = 5;
    small.grid.T = {2000};
    small.grid.delta = {0.15};
    SweepSpec big = small;
    big.grid.T = {1500, 2000};
    big.grid.delta = {0.05, 0.15};
    big.grid.lambda = {0.99, 0.995};
    auto a = sweep(small), b = sweep(big);
    auto it = std::find_if(b.cells.begin(), b.cells.end(),
                           [](const SweepCell& c) { return c.T == 2000 && c.delta == 0.15 && c.lambda == 0.995; });
    ASSERT_NE(it, b.cells.end());
    EXPECT_EQ(it->seeds, a.cells[0].seeds);
    EXPECT_EQ(it->counts, a.cells[0].counts);
    EXPECT_EQ(b.cells.size(), 8u);
}

TEST(Sweep, ThreadCountDoesNotChangeResult)
{
    SweepSpec s;
    s.R = 3;
    s.grid.T = {1500};
    s.grid.delta = {0.1, 0.2};
    s.threads = 1;
    auto a = sweep(s);
    s.threads = 3;
    auto b = sweep(s);
    ASSERT_EQ(a.cells.size(), b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].counts, b.cells[i].counts);
}

TEST(Sweep, FailuresAreRecordedNotThrown)
{
    SweepSpec s;
    s.system = System::nmm;
    s.R = 2;
    s.grid.T = {500};
    s.nmm.coupling_weight = 1;  // population parameters left unset
    auto r = sweep(s);
    ASSERT_EQ(r.cells.size(), 1u);
    EXPECT_TRUE(r.cells[0].counts.empty());
    ASSERT_EQ(r.cells[0].errors.size(), 2u);
    EXPECT_NE(r.cells[0].errors[0].find("not set"), std::string::npos);
    EXPECT_FALSE(r.cells[0].f1.mean);
}

TEST(Sweep, RejectsEmptyAxes)
{
    SweepSpec s;
    s.grid.delta.clear();
    EXPECT_THROW(sweep(s), InvalidParameter);
    s = SweepSpec{};
    s.R = 0;
    EXPECT_THROW(sweep(s), InvalidParameter);
}

TEST(Windowed, MidpointsFollowOverlap)
{
    Rng rng(72);
    Matrix<double> m(2000, 6);
    for (double& v : m.raw()) v = rng.normal();
    auto w = windowed_analysis(MultivariateSeries(m, 100.0), 4.0, 0.5, short_params());
    ASSERT_EQ(w.midpoints_s.size(), 9u);
    EXPECT_DOUBLE_EQ(w.midpoints_s[0], 2.0);
    for (std::size_t k = 1; k < w.midpoints_s.size(); ++k) EXPECT_NEAR(w.midpoints_s[k] - w.midpoints_s[k - 1], 2.0, 1e-12);
}

TEST(Windowed, IndependentChannelsHaveNoCoupling)
{
    Rng rng(73);
    Matrix<double> m(30000, 3);
    for (double& v : m.raw()) v = rng.normal();
    auto w = windowed_analysis(MultivariateSeries(m, 100.0), 100.0, 0.5, short_params());
    ASSERT_EQ(w.strengths.size(), 5u);
    for (const auto& s : w.strengths)
        for (double v : s) EXPECT_EQ(v, 0.0);
}

TEST(Windowed, CouplingSwitchingOnIsTracked)
{
    const double fs = 100;
    auto rec = switch_on_recording(40000, 20000, fs, 74);
    auto w = windowed_analysis(rec, 50.0, 0.5, short_params());
    std::size_t peaks = 0;
    for (std::size_t k = 0; k < w.midpoints_s.size(); ++k) {
        const double s = w.at(k, 0, 1, 1);  // target 0, source 1, lag 2
        const double window_end = w.midpoints_s[k] + 25.0;
        const double window_begin = w.midpoints_s[k] - 25.0;
        if (window_end <= 200.0) EXPECT_LT(s, 0.05) << "window at " << w.midpoints_s[k];
        if (window_begin >= 200.0) EXPECT_GT(s, 0.3) << "window at " << w.midpoints_s[k];
        for (const auto& cells : w.strengths[k]) {
            EXPECT_GE(cells, 0.0);
            EXPECT_LE(cells, 1.0);
            peaks += cells == 1.0;
        }
    }
    EXPECT_EQ(peaks, 1u);
}

TEST(Windowed, Errors)
{
    Rng rng(75);
    Matrix<double> m(1000, 2);
    for (double& v : m.raw()) v = rng.normal();
    InferenceParams p;  // d = 100 needs 212 samples per window
    try {
        windowed_analysis(MultivariateSeries(m, 100.0), 1.0, 0.5, p);
        FAIL() << "expected WindowTooShort";
    } catch (const WindowTooShort& e) {
        EXPECT_NE(std::string(e.what()).find("212"), std::string::npos);
    }
    EXPECT_THROW(windowed_analysis(MultivariateSeries(m), 4.0, 0.5, p), InvalidParameter);
    EXPECT_THROW(windowed_analysis(MultivariateSeries(m, 100.0), 4.0, 1.0, p), InvalidParameter);
    EXPECT_THROW(windowed_analysis(MultivariateSeries(m, 100.0), 20.0, 0.5, p), WindowTooShort);
}
