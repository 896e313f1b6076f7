#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "causal.hpp"
#include "parallel.hpp"
#include "simulate.hpp"

namespace moptn {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Delay-sensitive scoring works on (source, target, delay) triples over the
// full pair x delay grid; otherwise on ordered pairs alone.
inline ConfusionCounts score(const CausalNetwork& net, const GroundTruth& truth, bool delay_sensitive)
{
    const std::size_t N = net.channels;
    using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
    std::set<Key> inferred, expected;
    auto check = [&](std::size_t s, std::size_t t) {
        if (s >= N || t >= N) throw ChannelMismatch("edge references channel outside the scored universe");
    };
    for (const auto& e : net.edges) {
        check(e.source, e.target);
        inferred.insert({e.source, e.target, delay_sensitive ? e.delay : 0});
    }
    for (const auto& e : truth.edges) {
        check(e.source, e.target);
        if (e.source == e.target) continue;
        if (delay_sensitive && !e.delay) throw InvalidParameter("delay-sensitive scoring needs ground-truth delays");
        expected.insert({e.source, e.target, delay_sensitive ? *e.delay : 0});
    }
    ConfusionCounts c;
    for (const auto& k : inferred) (expected.count(k) ? c.tp : c.fp) += 1;
    for (const auto& k : expected) c.fn += !inferred.count(k);
    const std::size_t universe = N * (N - 1) * (delay_sensitive ? net.params.delays.size() : 1);
    // Truth edges off the delay grid can never be inferred; they stay FN and
    // take no room among the negatives.
    std::size_t off_grid = 0;
    if (delay_sensitive)
        for (const auto& [s, t, d] : expected) off_grid += !net.params.delays.index_of(d).has_value();
    c.tn = universe - (c.tp + c.fp + c.fn - off_grid);
    return c;
}

struct Metrics {
    std::optional<double> tpr, fpr, f1;
};

inline Metrics metrics(const ConfusionCounts& c)
{
    auto ratio = [](double num, double den) -> std::optional<double> {
        if (den <= 0) return std::nullopt;
        return num / den;
    };
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn),
                 tn = static_cast<double>(c.tn);
    return {ratio(tp, tp + fn), ratio(fp, fp + tn), ratio(tp, tp + 0.5 * (fp + fn))};
}

// ---------------------------------------------------------------------------
// Sweeps

enum class System { ar, lorenz, nmm };

inline std::string to_string(System s)
{
    switch (s) {
    case System::ar: return "ar";
    case System::lorenz: return "lorenz";
    case System::nmm: return "nmm";
    }
    return "?";
}

inline System system_from_string(const std::string& s)
{
    if (s == "ar") return System::ar;
    if (s == "lorenz") return System::lorenz;
    if (s == "nmm") return System::nmm;
    throw InvalidParameter("unknown system '" + s + "' (expected ar, lorenz or nmm)");
}

struct SweepGrid {
    std::vector<double> delta{0.15};
    std::vector<double> lambda{0.995};
    std::vector<std::size_t> T{10000};
    std::vector<double> NL{0.0};
    std::vector<double> K{5.0};
};

struct SweepSpec {
    System system = System::ar;
    SweepGrid grid;
    std::size_t R = 10;
    std::uint64_t seed = 1;
    InferenceParams inference;  // delta and lambda come from the grid
    std::optional<bool> delay_sensitive;
    LorenzConfig lorenz;
    NmmConfig nmm;
    unsigned threads = 0;

    bool scored_by_delay() const { return delay_sensitive.value_or(system != System::lorenz); }
};

struct Summary {
    std::optional<double> mean, std;
};

struct SweepCell {
    double delta = 0, lambda = 0;
    std::size_t T = 0;
    double NL = 0, K = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<ConfusionCounts> counts;  // one per successful realization
    std::vector<std::string> errors;
    Summary tpr, fpr, f1;
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepCell> cells;
};

namespace detail {

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }
inline std::uint64_t hash_double(std::uint64_t h, double v) { return hash_combine(h, std::bit_cast<std::uint64_t>(v)); }

inline Summary summarize(const std::vector<std::optional<double>>& xs)
{
    std::vector<double> v;
    for (const auto& x : xs)
        if (x) v.push_back(*x);
    if (v.empty()) return {};
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace detail

// Seed of one realization. It hashes the data-defining coordinates of the cell
// (system, T, NL, K) and the realization index, not the cell position, so
// growing the grid never moves an existing stream, and cells that differ only
// in lambda or delta analyse the same data.
inline std::uint64_t realization_seed(const SweepSpec& spec, std::size_t T, double NL, double K, std::size_t r)
{
    std::uint64_t h = detail::hash_combine(0x6d6f70746eULL, static_cast<std::uint64_t>(spec.system));
    h = detail::hash_combine(h, T);
    h = detail::hash_double(h, NL);
    h = detail::hash_double(h, spec.system == System::nmm ? K : 0.0);
    h = detail::hash_combine(h, r);
    return spec.seed ^ h;
}

inline Simulation simulate_system(const SweepSpec& spec, std::size_t T, double K, std::uint64_t seed)
{
    switch (spec.system) {
    case System::ar: return simulate_ar(T, seed);
    case System::lorenz: return simulate_lorenz_chain(T, spec.lorenz, seed);
    case System::nmm: return simulate_nmm(spec.nmm, K, T, seed);
    }
    throw InvalidParameter("unknown system");
}

inline SweepResult sweep(const SweepSpec& spec)
{
    const auto& g = spec.grid;
    require(!g.delta.empty() && !g.lambda.empty() && !g.T.empty() && !g.NL.empty() && !g.K.empty(),
            "every sweep axis needs at least one value");
    require(spec.R >= 1, "R must be >= 1");
    const bool by_delay = spec.scored_by_delay();

    SweepResult res{spec, {}};
    struct DataKey {
        std::size_t T;
        double NL, K;
    };
    std::vector<DataKey> data;
    for (auto T : g.T)
        for (auto NL : g.NL)
            for (auto K : g.K) data.push_back({T, NL, K});
    // Cells ordered T, NL, K, lambda, delta.
    for (const auto& dk : data)
        for (auto lam : g.lambda)
            for (auto del : g.delta) {
                SweepCell c;
                c.delta = del;
                c.lambda = lam;
                c.T = dk.T;
                c.NL = dk.NL;
                c.K = dk.K;
                for (std::size_t r = 0; r < spec.R; ++r) c.seeds.push_back(realization_seed(spec, dk.T, dk.NL, dk.K, r));
                res.cells.push_back(std::move(c));
            }
    const std::size_t per_data = g.lambda.size() * g.delta.size();

    // One task per (data point, realization); it fills R-indexed slots.
    struct Slot {
        std::optional<ConfusionCounts> counts;
        std::string error;
    };
    std::vector<std::vector<Slot>> slots(res.cells.size(), std::vector<Slot>(spec.R));
    parallel_for(data.size() * spec.R, spec.threads, [&](std::size_t task) {
        const std::size_t di = task / spec.R, r = task % spec.R;
        const auto& dk = data[di];
        const std::uint64_t seed = res.cells[di * per_data].seeds[r];
        try {
            auto sim = simulate_system(spec, dk.T, dk.K, seed);
            auto series = add_observation_noise(sim.series, dk.NL, splitmix64(seed ^ 0x6e6f697365ULL));
            InferenceParams ip = spec.inference;
            ip.threads = 1;
            auto pm = build_moptn(series, ip.embedding);
            for (std::size_t li = 0; li < g.lambda.size(); ++li) {
                ip.lambda = g.lambda[li];
                ip.delta = 0;
                auto tr = trace_inference(pm, ip);
                for (std::size_t dj = 0; dj < g.delta.size(); ++dj) {
                    ip.delta = g.delta[dj];
                    const std::size_t ci = di * per_data + li * g.delta.size() + dj;
                    slots[ci][r].counts = score(network_from_trace(tr, ip), sim.truth, by_delay);
                }
            }
        } catch (const std::exception& e) {
            for (std::size_t k = 0; k < per_data; ++k) slots[di * per_data + k][r].error = e.what();
        }
    });

    for (std::size_t ci = 0; ci < res.cells.size(); ++ci) {
        auto& c = res.cells[ci];
        std::vector<std::optional<double>> tpr, fpr, f1;
        for (std::size_t r = 0; r < spec.R; ++r) {
            const auto& s = slots[ci][r];
            if (!s.counts) {
                c.errors.push_back("realization " + std::to_string(r) + ": " + s.error);
                continue;
            }
            c.counts.push_back(*s.counts);
            auto m = metrics(*s.counts);
            tpr.push_back(m.tpr);
            fpr.push_back(m.fpr);
            f1.push_back(m.f1);
        }
        c.tpr = detail::summarize(tpr);
        c.fpr = detail::summarize(fpr);
        c.f1 = detail::summarize(f1);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Windowed analysis

struct WindowedCoupling {
    double window_s = 0;
    double overlap = 0;
    std::size_t N = 0;
    DelayGrid delays;
    std::vector<double> midpoints_s;
    // Per window, N*N*J laid out like CETensor: [target, source, delay].
    std::vector<std::vector<double>> strengths;

    double at(std::size_t w, std::size_t target, std::size_t source, std::size_t j) const
    {
        return strengths[w][(target * N + source) * delays.size() + j];
    }
};

inline std::size_t minimum_window_samples(const InferenceParams& p)
{
    return p.embedding.span() + p.delays.max() + 2;
}

inline WindowedCoupling windowed_analysis(const MultivariateSeries& series, double window_s, double overlap,
                                          const InferenceParams& p)
{
    p.validate();
    if (!series.sample_rate) throw InvalidParameter("windowed analysis needs a sample rate");
    require(overlap >= 0 && overlap < 1, "overlap must lie in [0, 1)");
    require(window_s > 0, "window length must be > 0");
    const double fs = *series.sample_rate;
    const auto len = static_cast<std::size_t>(std::llround(window_s * fs));
    const std::size_t min_len = minimum_window_samples(p);
    if (len < min_len)
        throw WindowTooShort("window of " + std::to_string(len) + " samples is shorter than the minimum " +
                             std::to_string(min_len) + " samples (" + std::to_string(min_len / fs) + " s)");
    if (len > series.length()) throw WindowTooShort("window is longer than the recording");
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(len) * (1 - overlap))));

    WindowedCoupling out;
    out.window_s = window_s;
    out.overlap = overlap;
    out.N = series.channels();
    out.delays = p.delays;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + len <= series.length(); s += step) starts.push_back(s);
    out.midpoints_s.resize(starts.size());
    out.strengths.resize(starts.size());

    InferenceParams ip = p;
    ip.threads = 1;
    parallel_for(starts.size(), p.threads, [&](std::size_t w) {
        Matrix<double> part(len, out.N);
        for (std::size_t n = 0; n < out.N; ++n) {
            auto src = series.channel(n).subspan(starts[w], len);
            std::copy(src.begin(), src.end(), part.col(n).begin());
        }
        MultivariateSeries win(std::move(part), fs, series.channel_names);
        auto tr = trace_inference(build_moptn(win, ip.embedding), ip);
        auto h = pruned_tensor(tr, ip.delta);
        std::vector<double> s(h.values.size(), 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = h.h_max - h.values[i];
        out.strengths[w] = std::move(s);
        out.midpoints_s[w] = (static_cast<double>(starts[w]) + static_cast<double>(len) / 2) / fs;
    });
    double peak = 0;
    for (const auto& s : out.strengths)
        for (double v : s) peak = std::max(peak, v);
    for (auto& s : out.strengths)
        for (double& v : s) v = peak > 0 ? v / peak : 0.0;
    return out;
}

}  // namespace moptn
