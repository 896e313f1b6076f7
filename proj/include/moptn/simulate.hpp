#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "ordinal.hpp"

namespace moptn {

// mt19937_64 (bit-exact by the C++ standard) feeding 53-bit uniforms into the
// basic Box-Muller transform. std::normal_distribution is implementation
// defined, so it is not used anywhere a stream has to be reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        return radius * std::cos(angle);
    }

    std::uint64_t next() { return engine_(); }

    // Uniform integer in [0, n) by rejection, so it does not depend on the
    // library's distribution implementation either.
    std::uint64_t below(std::uint64_t n)
    {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do v = engine_();
        while (v >= limit);
        return v % n;
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct TrueEdge {
    std::size_t source = 0;
    std::size_t target = 0;
    std::optional<std::size_t> delay;  // empty for continuous coupling
    friend bool operator==(const TrueEdge&, const TrueEdge&) = default;
};

struct GroundTruth {
    std::vector<TrueEdge> edges;
    std::string description;
};

struct Simulation {
    MultivariateSeries series;
    GroundTruth truth;
};

// ---------------------------------------------------------------------------
// Delay-coupled nonlinear maps

inline double ar_map(double x) { return 3.4 * x * (1.0 - x * x) * std::exp(-x * x); }

struct MapCoupling {
    std::size_t source = 0;
    std::size_t target = 0;
    std::size_t delay = 1;
    double coefficient = 0;
};

struct MapNetworkConfig {
    std::size_t N = 0;
    std::vector<MapCoupling> couplings;
    double noise_scale = 0.4;
    std::size_t burn_in = 1000;
    std::string description = "map network";
};

// The nine-channel benchmark. `scale` multiplies every coupling coefficient.
inline MapNetworkConfig ar_system(double scale = 1.0)
{
    MapNetworkConfig cfg;
    cfg.N = 9;
    cfg.description = "nonlinear autoregressive benchmark";
    // (source, target, delay, coefficient), channels zero-based
    cfg.couplings = {
        {1, 0, 4, 2.5}, {2, 0, 2, 1.8}, {3, 0, 2, 1.5}, {0, 2, 1, 0.25}, {4, 3, 3, 1.5},
        {5, 3, 1, 1.2}, {6, 5, 3, 1.5}, {6, 7, 1, 0.8}, {6, 8, 1, 1.8},
    };
    for (auto& c : cfg.couplings) c.coefficient *= scale;
    return cfg;
}

inline Simulation simulate_map_network(const MapNetworkConfig& cfg, std::size_t T, std::uint64_t seed)
{
    require(cfg.N >= 1, "map network needs at least one channel");
    require(T >= 1, "T must be >= 1");
    std::size_t lag = 1;
    for (const auto& c : cfg.couplings) {
        require(c.source < cfg.N && c.target < cfg.N, "coupling channel out of range");
        require(c.source != c.target, "self-coupling is implicit in the map");
        require(c.delay >= 1, "coupling delay must be >= 1");
        lag = std::max(lag, c.delay);
    }
    Rng rng(seed);
    const std::size_t L = T + cfg.burn_in + lag;
    Matrix<double> x(L, cfg.N, 0.0);
    for (std::size_t t = lag; t < L; ++t) {
        for (std::size_t n = 0; n < cfg.N; ++n) x(t, n) = ar_map(x(t - 1, n));
        for (const auto& c : cfg.couplings) x(t, c.target) += c.coefficient * x(t - c.delay, c.source);
        for (std::size_t n = 0; n < cfg.N; ++n) {
            x(t, n) += cfg.noise_scale * rng.normal();
            if (!std::isfinite(x(t, n))) throw NonFiniteState("map network diverged at step " + std::to_string(t));
        }
    }
    Matrix<double> out(T, cfg.N);
    for (std::size_t n = 0; n < cfg.N; ++n)
        std::copy_n(x.col(n).begin() + static_cast<std::ptrdiff_t>(L - T), T, out.col(n).begin());
    Simulation sim{MultivariateSeries(std::move(out)), {{}, cfg.description}};
    for (const auto& c : cfg.couplings)
        if (c.coefficient != 0) sim.truth.edges.push_back({c.source, c.target, c.delay});
    return sim;
}

inline Simulation simulate_ar(std::size_t T, std::uint64_t seed, double coupling_scale = 1.0)
{
    require(T >= 100, "AR simulation needs T >= 100");
    return simulate_map_network(ar_system(coupling_scale), T, seed);
}

// ---------------------------------------------------------------------------
// Diffusively chained Lorenz systems

struct LorenzConfig {
    double c = 0.6;
    double dt = 0.001;
    std::size_t transient = 100000;
    double sigma = 10, rho = 28, beta = 8.0 / 3.0;
    // All three systems start from one state (synchrony check).
    bool identical_initial = false;
};

inline Simulation simulate_lorenz_chain(std::size_t T, const LorenzConfig& cfg, std::uint64_t seed)
{
    require(cfg.c >= 0, "coupling c must be >= 0");
    require(cfg.dt > 0, "dt must be > 0");
    require(T >= 1, "T must be >= 1");
    using State = std::array<double, 9>;
    Rng rng(seed);
    State s{};
    for (std::size_t k = 0; k < 3; ++k) {
        if (cfg.identical_initial && k > 0) {
            std::copy_n(s.begin(), 3, s.begin() + 3 * k);
            continue;
        }
        s[3 * k] = rng.uniform(-10, 10);
        s[3 * k + 1] = rng.uniform(-10, 10);
        s[3 * k + 2] = rng.uniform(10, 40);
    }
    auto rhs = [&](const State& v) {
        State o;
        for (std::size_t k = 0; k < 3; ++k) {
            const double x = v[3 * k], y = v[3 * k + 1], z = v[3 * k + 2];
            o[3 * k] = cfg.sigma * (y - x);
            o[3 * k + 1] = cfg.rho * x - y - x * z;
            o[3 * k + 2] = x * y - cfg.beta * z;
        }
        o[3] += cfg.c * (v[0] - v[3]);
        o[6] += cfg.c * (v[3] - v[6]);
        return o;
    };
    auto axpy = [](const State& a, double h, const State& b) {
        State o;
        for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] + h * b[i];
        return o;
    };
    const double h = cfg.dt;
    Matrix<double> out(T, 3);
    for (std::size_t step = 0; step < cfg.transient + T; ++step) {
        const State k1 = rhs(s), k2 = rhs(axpy(s, h / 2, k1)), k3 = rhs(axpy(s, h / 2, k2)),
                    k4 = rhs(axpy(s, h, k3));
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
            if (!std::isfinite(s[i])) throw NonFiniteState("Lorenz integration diverged at step " + std::to_string(step));
        }
        if (step >= cfg.transient)
            for (std::size_t k = 0; k < 3; ++k) out(step - cfg.transient, k) = s[3 * k];
    }
    Simulation sim{MultivariateSeries(std::move(out)), {{}, "chained Lorenz systems"}};
    if (cfg.c > 0) sim.truth.edges = {{0, 1, std::nullopt}, {1, 2, std::nullopt}};
    return sim;
}

// ---------------------------------------------------------------------------
// Delay-coupled neural masses

struct PopulationParams {
    std::optional<double> G_e, G_s, G_f;     // synaptic gains
    std::optional<double> h_e, h_s, h_f;     // synaptic rate constants (1/s)
    std::optional<double> e0, r;             // sigmoid
    std::optional<double> C_pe, C_ps, C_pf;  // connectivity constants
    std::optional<double> C_ep, C_sp, C_fp, C_fs, C_ff;
};

struct NmmConfig {
    std::size_t N = 8;
    Matrix<double> W;  // W(i, j): weight of region j onto region i
    double delay_ms = 40;
    double sample_rate = 1000;
    PopulationParams population;
    double noise_mean = 0;
    double noise_variance = 5;
    double fast_noise_variance = 0;  // input to the fast inhibitory loop
    double coupling_weight = 0;      // weight given to randomly drawn edges
    std::size_t burn_in = 3000;      // samples
    double initial_state_scale = 0.01;

    std::size_t delay_samples() const
    {
        const double d = delay_ms * sample_rate / 1000.0;
        const double k = std::round(d);
        require(std::abs(d - k) < 1e-9 * std::max(1.0, d) && k >= 1,
                "delay_ms must be a positive integer multiple of the sample period");
        return static_cast<std::size_t>(k);
    }
};

namespace detail {

struct ResolvedPopulation {
    double Ge, Gs, Gf, he, hs, hf, e0, r, Cpe, Cps, Cpf, Cep, Csp, Cfp, Cfs, Cff;
};

inline ResolvedPopulation resolve(const PopulationParams& p)
{
    auto get = [](const std::optional<double>& v, const char* name) {
        if (!v) throw ParameterUnset(std::string("neural-mass parameter ") + name + " is not set");
        if (!(*v > 0)) throw InvalidParameter(std::string("neural-mass parameter ") + name + " must be > 0");
        return *v;
    };
    return {get(p.G_e, "G_e"),   get(p.G_s, "G_s"),   get(p.G_f, "G_f"),   get(p.h_e, "h_e"),
            get(p.h_s, "h_s"),   get(p.h_f, "h_f"),   get(p.e0, "e0"),     get(p.r, "r"),
            get(p.C_pe, "C_pe"), get(p.C_ps, "C_ps"), get(p.C_pf, "C_pf"), get(p.C_ep, "C_ep"),
            get(p.C_sp, "C_sp"), get(p.C_fp, "C_fp"), get(p.C_fs, "C_fs"), get(p.C_ff, "C_ff")};
}

// State: y_p x_p y_e x_e y_s x_s y_f x_f y_l x_l
using MassState = std::array<double, 10>;

inline double sigmoid(double v, double e0, double r) { return 2 * e0 / (1 + std::exp(-r * v)) - e0; }

inline double pyramidal_potential(const MassState& s, const ResolvedPopulation& p)
{
    return p.Cpe * s[2] - p.Cps * s[4] - p.Cpf * s[6];
}

inline MassState mass_rhs(const MassState& s, double up, double uf, const ResolvedPopulation& p)
{
    const double zp = sigmoid(pyramidal_potential(s, p), p.e0, p.r);
    const double ze = sigmoid(p.Cep * s[0], p.e0, p.r);
    const double zs = sigmoid(p.Csp * s[0], p.e0, p.r);
    const double zf = sigmoid(p.Cfp * s[0] - p.Cfs * s[4] - p.Cff * s[8], p.e0, p.r);
    MassState o;
    o[0] = s[1];
    o[1] = p.Ge * p.he * zp - 2 * p.he * s[1] - p.he * p.he * s[0];
    o[2] = s[3];
    o[3] = p.Ge * p.he * (ze + up / p.Cpe) - 2 * p.he * s[3] - p.he * p.he * s[2];
    o[4] = s[5];
    o[5] = p.Gs * p.hs * zs - 2 * p.hs * s[5] - p.hs * p.hs * s[4];
    o[6] = s[7];
    o[7] = p.Gf * p.hf * zf - 2 * p.hf * s[7] - p.hf * p.hf * s[6];
    o[8] = s[9];
    o[9] = p.Ge * p.he * uf - 2 * p.he * s[9] - p.he * p.he * s[8];
    return o;
}

}  // namespace detail

// Directed graph with floor(K * N^2 / 100) edges drawn uniformly without
// replacement from the N(N-1) off-diagonal cells.
inline std::vector<TrueEdge> random_graph(std::size_t N, double K_percent, Rng& rng)
{
    require(K_percent > 0 && K_percent < 100, "K_percent must lie in (0, 100)");
    const auto count = static_cast<std::size_t>(std::floor(K_percent * static_cast<double>(N * N) / 100.0 + 1e-9));
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t s = 0; s < N; ++s)
        for (std::size_t t = 0; t < N; ++t)
            if (s != t) cells.emplace_back(s, t);
    require(count <= cells.size(), "K_percent asks for more edges than off-diagonal cells");
    // partial Fisher-Yates
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.below(cells.size() - i);
        std::swap(cells[i], cells[j]);
    }
    std::vector<TrueEdge> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back({cells[i].first, cells[i].second, std::nullopt});
    std::sort(out.begin(), out.end(), [](const TrueEdge& a, const TrueEdge& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    return out;
}

// Integrates the network with cfg.W as given. RK4 with step 1/sample_rate;
// noise and delayed input are held fixed across the four stages.
inline Simulation simulate_nmm(const NmmConfig& cfg, std::size_t T, std::uint64_t seed)
{
    const auto p = detail::resolve(cfg.population);
    const std::size_t N = cfg.N;
    require(N >= 1, "N must be >= 1");
    require(T >= 1, "T must be >= 1");
    require(cfg.sample_rate > 0, "sample_rate must be > 0");
    require(cfg.W.rows() == N && cfg.W.cols() == N, "W must be N x N");
    require(cfg.noise_variance >= 0 && cfg.fast_noise_variance >= 0, "noise variance must be >= 0");
    for (double w : cfg.W.raw()) require(w >= 0, "W must be non-negative");
    const std::size_t d = cfg.delay_samples();
    const double dt = 1.0 / cfg.sample_rate;
    const double sd = std::sqrt(cfg.noise_variance);
    const double sd_fast = std::sqrt(cfg.fast_noise_variance);

    Rng rng(seed);
    std::vector<detail::MassState> state(N);
    for (auto& s : state)
        for (double& v : s) v = cfg.initial_state_scale * rng.normal();

    const std::size_t L = cfg.burn_in + T;
    Matrix<double> pulse(L, N, 0.0);  // z_p history for the delayed coupling
    Matrix<double> out(T, N);
    std::vector<double> up(N), uf(N);
    for (std::size_t t = 0; t < L; ++t) {
        for (std::size_t i = 0; i < N; ++i) {
            up[i] = cfg.noise_mean + sd * rng.normal();
            uf[i] = sd_fast > 0 ? sd_fast * rng.normal() : 0.0;
            if (t >= d)
                for (std::size_t j = 0; j < N; ++j)
                    if (cfg.W(i, j) != 0) up[i] += cfg.W(i, j) * pulse(t - d, j);
        }
        for (std::size_t i = 0; i < N; ++i) {
            auto& s = state[i];
            auto stage = [&](const detail::MassState& k, double h) {
                detail::MassState o;
                for (std::size_t q = 0; q < o.size(); ++q) o[q] = s[q] + h * k[q];
                return o;
            };
            const auto k1 = detail::mass_rhs(s, up[i], uf[i], p);
            const auto k2 = detail::mass_rhs(stage(k1, dt / 2), up[i], uf[i], p);
            const auto k3 = detail::mass_rhs(stage(k2, dt / 2), up[i], uf[i], p);
            const auto k4 = detail::mass_rhs(stage(k3, dt), up[i], uf[i], p);
            for (std::size_t q = 0; q < s.size(); ++q) s[q] += dt / 6 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q]);
        }
        for (std::size_t i = 0; i < N; ++i) {
            const double vp = detail::pyramidal_potential(state[i], p);
            if (!std::isfinite(vp)) throw NonFiniteState("neural-mass integration diverged at step " + std::to_string(t));
            pulse(t, i) = detail::sigmoid(vp, p.e0, p.r);
            if (t >= cfg.burn_in) out(t - cfg.burn_in, i) = vp;
        }
    }
    Simulation sim{MultivariateSeries(std::move(out), cfg.sample_rate), {{}, "neural-mass network"}};
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j)
            if (i != j && cfg.W(i, j) > 0) sim.truth.edges.push_back({j, i, d});
    std::sort(sim.truth.edges.begin(), sim.truth.edges.end(), [](const TrueEdge& a, const TrueEdge& b) {
        return std::tie(a.source, a.target) < std::tie(b.source, b.target);
    });
    return sim;
}

// Draws a K% random graph (weights cfg.coupling_weight) and integrates it.
// Graph and dynamics use separate streams derived from `seed`.
inline Simulation simulate_nmm(NmmConfig cfg, double K_percent, std::size_t T, std::uint64_t seed)
{
    require(cfg.coupling_weight > 0, "coupling_weight must be > 0 for random graphs");
    Rng graph_rng(splitmix64(seed ^ 0x6772617068ULL));
    cfg.W = Matrix<double>(cfg.N, cfg.N, 0.0);
    for (const auto& e : random_graph(cfg.N, K_percent, graph_rng)) cfg.W(e.target, e.source) = cfg.coupling_weight;
    return simulate_nmm(cfg, T, seed);
}

// ---------------------------------------------------------------------------

inline double sample_std(std::span<const double> x)
{
    if (x.size() < 2) return 0.0;
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// y = x + e with e ~ N(0, (beta * std(x))^2), independently per channel.
inline MultivariateSeries add_observation_noise(const MultivariateSeries& series, double beta, std::uint64_t seed)
{
    require(beta >= 0, "noise level must be >= 0");
    MultivariateSeries out = series;
    if (beta == 0) return out;
    Rng rng(seed);
    for (std::size_t n = 0; n < out.channels(); ++n) {
        const double scale = beta * sample_std(series.channel(n));
        for (double& v : out.data.col(n)) v += scale * rng.normal();
    }
    return out;
}

}  // namespace moptn
