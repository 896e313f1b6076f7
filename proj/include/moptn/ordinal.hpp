#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"

namespace moptn {

using Symbol = std::uint16_t;

inline constexpr std::size_t kMaxEmbeddingDim = 8;

constexpr std::size_t factorial(std::size_t k) noexcept
{
    std::size_t f = 1;
    for (std::size_t i = 2; i <= k; ++i) f *= i;
    return f;
}

struct EmbeddingParams {
    std::size_t M = 3;
    std::size_t d = 100;

    void validate() const
    {
        require(M >= 2, "embedding dimension M must be >= 2");
        require(M <= kMaxEmbeddingDim, "embedding dimension M must be <= 8");
        require(d >= 1, "embedding delay d must be >= 1");
    }
    std::size_t span() const noexcept { return (M - 1) * d; }
    std::size_t alphabet() const noexcept { return factorial(M); }
    // Number of embedding vectors for a series of length T.
    std::size_t count(std::size_t T) const noexcept { return T > span() ? T - span() : 0; }

    friend bool operator==(const EmbeddingParams&, const EmbeddingParams&) = default;
};

struct MultivariateSeries {
    Matrix<double> data;  // T x N
    std::optional<double> sample_rate;
    std::vector<std::string> channel_names;

    MultivariateSeries() = default;
    explicit MultivariateSeries(Matrix<double> m, std::optional<double> fs = std::nullopt,
                                std::vector<std::string> names = {})
        : data(std::move(m)), sample_rate(fs), channel_names(std::move(names))
    {
        if (channel_names.empty())
            for (std::size_t n = 0; n < data.cols(); ++n)
                channel_names.push_back("x" + std::to_string(n + 1));
        require(channel_names.size() == data.cols(), "one channel name per column required");
    }

    std::size_t length() const noexcept { return data.rows(); }
    std::size_t channels() const noexcept { return data.cols(); }
    std::span<const double> channel(std::size_t n) const { return data.col(n); }

    void require_finite() const
    {
        for (std::size_t n = 0; n < channels(); ++n) {
            auto c = channel(n);
            for (std::size_t t = 0; t < c.size(); ++t)
                if (!std::isfinite(c[t]))
                    throw NonFiniteValue("non-finite sample in channel " + channel_names[n] +
                                         " at row " + std::to_string(t));
        }
    }
};

struct PatternMatrix {
    Matrix<Symbol> symbols;  // T' x N
    EmbeddingParams params;

    std::size_t length() const noexcept { return symbols.rows(); }
    std::size_t channels() const noexcept { return symbols.cols(); }
    std::size_t alphabet() const noexcept { return params.alphabet(); }
    std::span<const Symbol> channel(std::size_t n) const { return symbols.col(n); }
};

template <std::floating_point R>
std::vector<std::vector<R>> embed(std::span<const R> x, const EmbeddingParams& p)
{
    p.validate();
    if (x.size() < p.span() + 1)
        throw SeriesTooShort("series of length " + std::to_string(x.size()) +
                             " cannot be embedded with M=" + std::to_string(p.M) +
                             ", d=" + std::to_string(p.d));
    std::vector<std::vector<R>> out(p.count(x.size()), std::vector<R>(p.M));
    for (std::size_t t = 0; t < out.size(); ++t)
        for (std::size_t k = 0; k < p.M; ++k) out[t][k] = x[t + k * p.d];
    return out;
}

namespace detail {

// Stable ascending argsort of a short vector: equal values keep time order.
template <class Get>
std::array<std::uint8_t, kMaxEmbeddingDim> rank_order(std::size_t M, Get&& value)
{
    std::array<std::uint8_t, kMaxEmbeddingDim> s{};
    for (std::size_t i = 0; i < M; ++i) {
        // insertion sort; strict comparison keeps ties in index order
        std::size_t j = i;
        auto vi = value(i);
        while (j > 0 && value(s[j - 1]) > vi) {
            s[j] = s[j - 1];
            --j;
        }
        s[j] = static_cast<std::uint8_t>(i);
    }
    return s;
}

inline Symbol lehmer_rank(std::span<const std::uint8_t> perm)
{
    std::size_t idx = 0;
    const std::size_t M = perm.size();
    for (std::size_t i = 0; i < M; ++i) {
        std::size_t smaller = 0;
        for (std::size_t j = i + 1; j < M; ++j) smaller += perm[j] < perm[i];
        idx = idx * (M - i) + smaller;
    }
    return static_cast<Symbol>(idx);
}

}  // namespace detail

// Permutation (s_0, ..., s_{M-1}) with z[s_0] <= z[s_1] <= ..., ties by index.
template <std::floating_point R>
std::vector<std::size_t> ordinal_permutation(std::span<const R> z)
{
    require(z.size() >= 2 && z.size() <= kMaxEmbeddingDim, "pattern length must be in [2, 8]");
    for (R v : z)
        if (!std::isfinite(v)) throw NonFiniteValue("non-finite value in embedding vector");
    auto s = detail::rank_order(z.size(), [&](std::size_t i) { return z[i]; });
    return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(z.size())};
}

template <std::floating_point R>
Symbol encode_pattern(std::span<const R> z)
{
    auto perm = ordinal_permutation(z);
    std::array<std::uint8_t, kMaxEmbeddingDim> p{};
    std::copy(perm.begin(), perm.end(), p.begin());
    return detail::lehmer_rank(std::span<const std::uint8_t>(p.data(), perm.size()));
}

// Inverse of the lexicographic rank, mostly for tests and diagnostics.
inline std::vector<std::size_t> permutation_from_rank(std::size_t rank, std::size_t M)
{
    require(rank < factorial(M), "rank out of range");
    std::vector<std::size_t> pool(M);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::size_t> out;
    for (std::size_t i = M; i-- > 0;) {
        std::size_t f = factorial(i);
        std::size_t k = rank / f;
        rank %= f;
        out.push_back(pool[k]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

inline std::vector<Symbol> encode_channel(std::span<const double> x, const EmbeddingParams& p)
{
    p.validate();
    if (x.size() < p.span() + 1)
        throw SeriesTooShort("series of length " + std::to_string(x.size()) +
                             " is shorter than the embedding span " + std::to_string(p.span() + 1));
    const std::size_t Tp = p.count(x.size());
    std::vector<Symbol> out(Tp);
    for (std::size_t t = 0; t < Tp; ++t) {
        auto s = detail::rank_order(p.M, [&](std::size_t i) { return x[t + i * p.d]; });
        out[t] = detail::lehmer_rank(std::span<const std::uint8_t>(s.data(), p.M));
    }
    return out;
}

inline PatternMatrix build_moptn(const MultivariateSeries& series, const EmbeddingParams& p)
{
    p.validate();
    series.require_finite();
    const std::size_t T = series.length();
    if (T < p.span() + 1)
        throw SeriesTooShort("series of length " + std::to_string(T) +
                             " is shorter than the embedding span " + std::to_string(p.span() + 1));
    PatternMatrix pm{Matrix<Symbol>(p.count(T), series.channels()), p};
    for (std::size_t n = 0; n < series.channels(); ++n) {
        auto sym = encode_channel(series.channel(n), p);
        std::copy(sym.begin(), sym.end(), pm.symbols.col(n).begin());
    }
    return pm;
}

// Row-stochastic transition frequencies between successive patterns.
inline Matrix<double> transition_network(std::span<const Symbol> patterns, std::size_t alphabet)
{
    if (patterns.size() < 2) throw SeriesTooShort("transition network needs at least two symbols");
    Matrix<double> w(alphabet, alphabet, 0.0);
    std::vector<double> out_deg(alphabet, 0.0);
    for (std::size_t t = 0; t + 1 < patterns.size(); ++t) {
        require(patterns[t] < alphabet && patterns[t + 1] < alphabet, "symbol exceeds alphabet");
        w(patterns[t], patterns[t + 1]) += 1.0;
        out_deg[patterns[t]] += 1.0;
    }
    for (std::size_t i = 0; i < alphabet; ++i)
        if (out_deg[i] > 0)
            for (std::size_t j = 0; j < alphabet; ++j) w(i, j) /= out_deg[i];
    return w;
}

}  // namespace moptn
