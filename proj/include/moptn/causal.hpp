#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "entropy.hpp"
#include "ordinal.hpp"

namespace moptn {

struct Link {
    std::size_t channel = 0;
    std::size_t delay = 0;
    double ce = 0;
    friend bool operator==(const Link&, const Link&) = default;
};

struct NeighborSets {
    std::vector<std::vector<Link>> parents;   // parents[m]: sources of m
    std::vector<std::vector<Link>> children;  // children[n]: targets of n
    std::size_t min_delay = 0;
};

inline NeighborSets neighbor_sets(const CETensor& h)
{
    require(h.thresholded, "neighbor sets need a thresholded tensor");
    NeighborSets s;
    s.parents.resize(h.N);
    s.children.resize(h.N);
    s.min_delay = h.delays.min();
    for (std::size_t m = 0; m < h.N; ++m)
        for (std::size_t n = 0; n < h.N; ++n) {
            if (n == m) continue;
            for (std::size_t j = 0; j < h.J(); ++j) {
                const double v = h.at(m, n, j);
                if (v < h.h_max) {
                    s.parents[m].push_back({n, h.delays[j], v});
                    s.children[n].push_back({m, h.delays[j], v});
                }
            }
        }
    return s;
}

enum class Fallback {
    // An empty child set goes straight to the target's own patterns.
    literal,
    // An empty child set is treated like an empty intersection, so the
    // shared-parent step still runs.
    merged,
};

struct ConditioningPolicy {
    std::size_t r_max = 2;
    Fallback fallback = Fallback::merged;
    // Keep only the lowest-CE delay of each conditioning channel.
    bool one_delay_per_channel = true;
};

inline ConditioningSet minimal_conditioning_set(const NeighborSets& s, std::size_t m, std::size_t n,
                                                const ConditioningPolicy& policy = {})
{
    require(m < s.parents.size() && n < s.parents.size(), "channel out of range");
    require(policy.r_max >= 1, "r_max must be >= 1");
    const auto& pm = s.parents[m];
    if (std::none_of(pm.begin(), pm.end(), [&](const Link& l) { return l.channel == n; }))
        throw CandidateNotALink("no candidate link " + std::to_string(n) + " -> " + std::to_string(m));

    auto channels_of = [](const std::vector<Link>& ls, std::size_t except) {
        std::set<std::size_t> out;
        for (const auto& l : ls)
            if (l.channel != except) out.insert(l.channel);
        return out;
    };
    auto restrict_to = [&](const std::set<std::size_t>& keep) {
        std::vector<Link> out;
        for (const auto& l : pm)
            if (keep.count(l.channel)) out.push_back(l);
        return out;
    };
    const ConditioningSet self{{m, s.min_delay}};

    const auto c_hat = channels_of(s.children[n], m);
    std::vector<Link> pmin;
    if (c_hat.empty() && policy.fallback == Fallback::literal) return self;
    pmin = restrict_to(c_hat);
    if (pmin.empty()) pmin = restrict_to(channels_of(s.parents[n], m));
    if (pmin.empty()) return self;

    std::sort(pmin.begin(), pmin.end(), [](const Link& a, const Link& b) {
        return std::tie(a.ce, a.channel, a.delay) < std::tie(b.ce, b.channel, b.delay);
    });
    ConditioningSet out;
    std::set<std::size_t> seen;
    for (const auto& l : pmin) {
        if (out.size() == policy.r_max) break;
        if (policy.one_delay_per_channel && !seen.insert(l.channel).second) continue;
        out.push_back({l.channel, l.delay});
    }
    return out;
}

struct EpsilonResult {
    double epsilon = 0;
    bool keep = false;
};

// epsilon = H(X_m | P_min) - H(X_m | P_min, X_n at tau), both on one window.
inline EpsilonResult epsilon_test(const PatternMatrix& pm, std::size_t m, std::size_t n, std::size_t tau,
                                  const ConditioningSet& pmin, double delta,
                                  std::size_t r_max = kDefaultConditioningLimit)
{
    require(delta >= 0, "delta must be >= 0");
    ConditioningSet with = pmin;
    with.push_back({n, tau});
    const std::size_t start = max_delay(with);
    const double h0 = conditional_entropy_on_window(pm, m, pmin, start, r_max + 1);
    const double h1 = conditional_entropy_on_window(pm, m, with, start, r_max + 1);
    const double eps = h0 - h1;
    return {eps, eps >= delta};
}

struct InferenceParams {
    EmbeddingParams embedding{3, 100};
    DelayGrid delays = DelayGrid::range(1, 10);
    double lambda = 0.995;
    double delta = 0.15;
    ConditioningPolicy conditioning{};
    unsigned threads = 0;

    void validate() const
    {
        embedding.validate();
        delays.validate();
        if (!(lambda > 0 && lambda <= 1)) throw InvalidLambda("lambda must lie in (0, 1]");
        require(delta >= 0, "delta must be >= 0");
        require(conditioning.r_max >= 1, "r_max must be >= 1");
    }
};

struct Edge {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t delay = 0;
    double ce = 0;
    double strength = 0;  // H_max - ce
    double epsilon = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Candidate {
    Edge edge;
    ConditioningSet conditioning;
};

struct CausalNetwork {
    std::vector<Edge> edges;
    InferenceParams params;
    double h_max = 0;
    std::size_t channels = 0;
};

// Thresholded candidates with their epsilon values; survivors are the ones
// with epsilon >= delta. Every candidate is tested against the same frozen
// neighbor sets, so the outcome does not depend on evaluation order.
struct InferenceTrace {
    CETensor tensor;  // thresholded, before pruning
    NeighborSets neighbors;
    std::vector<Candidate> candidates;
};

inline InferenceTrace trace_inference(const PatternMatrix& pm, const InferenceParams& p)
{
    p.validate();
    InferenceTrace tr;
    tr.tensor = threshold(ce_tensor(pm, p.delays, p.threads), p.lambda);
    tr.neighbors = neighbor_sets(tr.tensor);
    for (std::size_t m = 0; m < pm.channels(); ++m)
        for (const auto& l : tr.neighbors.parents[m]) {
            Candidate c;
            c.edge = {l.channel, m, l.delay, l.ce, tr.tensor.h_max - l.ce, 0.0};
            tr.candidates.push_back(std::move(c));
        }
    parallel_for(tr.candidates.size(), p.threads, [&](std::size_t i) {
        auto& c = tr.candidates[i];
        c.conditioning = minimal_conditioning_set(tr.neighbors, c.edge.target, c.edge.source, p.conditioning);
        c.edge.epsilon = epsilon_test(pm, c.edge.target, c.edge.source, c.edge.delay, c.conditioning, 0.0,
                                      p.conditioning.r_max)
                             .epsilon;
    });
    return tr;
}

inline CausalNetwork network_from_trace(const InferenceTrace& tr, const InferenceParams& p)
{
    CausalNetwork net;
    net.params = p;
    net.h_max = tr.tensor.h_max;
    net.channels = tr.tensor.N;
    for (const auto& c : tr.candidates)
        if (c.edge.epsilon >= p.delta) net.edges.push_back(c.edge);
    return net;
}

// Tensor after pruning: every rejected candidate reset to H_max.
inline CETensor pruned_tensor(const InferenceTrace& tr, double delta)
{
    CETensor h = tr.tensor;
    for (const auto& c : tr.candidates)
        if (c.edge.epsilon < delta) h.at(c.edge.target, c.edge.source, *h.delays.index_of(c.edge.delay)) = h.h_max;
    return h;
}

inline CausalNetwork infer_network(const PatternMatrix& pm, const InferenceParams& p)
{
    return network_from_trace(trace_inference(pm, p), p);
}

inline CausalNetwork infer_network(const MultivariateSeries& series, const InferenceParams& p)
{
    p.validate();
    return infer_network(build_moptn(series, p.embedding), p);
}

// Bivariate stage only: every thresholded candidate, unpruned.
inline std::vector<Edge> bivariate_links(const PatternMatrix& pm, const InferenceParams& p)
{
    p.validate();
    auto h = threshold(ce_tensor(pm, p.delays, p.threads), p.lambda);
    std::vector<Edge> out;
    for (std::size_t m = 0; m < h.N; ++m)
        for (std::size_t n = 0; n < h.N; ++n)
            for (std::size_t j = 0; n != m && j < h.J(); ++j)
                if (h.at(m, n, j) < h.h_max) out.push_back({n, m, h.delays[j], h.at(m, n, j), h.h_max - h.at(m, n, j), 0});
    return out;
}

}  // namespace moptn
