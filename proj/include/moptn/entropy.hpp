#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "matrix.hpp"
#include "ordinal.hpp"
#include "parallel.hpp"

namespace moptn {

// Soft diagnostics (sparse histograms). Replace to silence or redirect.
inline std::function<void(std::string_view)>& warning_handler()
{
    static std::function<void(std::string_view)> h = [](std::string_view msg) {
        static std::atomic<bool> shown{false};
        if (!shown.exchange(true)) std::clog << "moptn warning: " << msg << '\n';
    };
    return h;
}

struct DelayGrid {
    std::vector<std::size_t> delays;

    static DelayGrid range(std::size_t first, std::size_t last, std::size_t step = 1)
    {
        require(step >= 1 && first <= last, "delay range must satisfy first <= last, step >= 1");
        DelayGrid g;
        for (std::size_t t = first; t <= last; t += step) g.delays.push_back(t);
        return g;
    }

    std::size_t size() const noexcept { return delays.size(); }
    std::size_t operator[](std::size_t j) const { return delays[j]; }
    std::size_t min() const { return delays.front(); }
    std::size_t max() const { return delays.back(); }

    std::optional<std::size_t> index_of(std::size_t tau) const
    {
        auto it = std::lower_bound(delays.begin(), delays.end(), tau);
        if (it == delays.end() || *it != tau) return std::nullopt;
        return static_cast<std::size_t>(it - delays.begin());
    }

    void validate() const
    {
        require(!delays.empty(), "delay grid must not be empty");
        for (std::size_t j = 1; j < delays.size(); ++j)
            require(delays[j] > delays[j - 1], "delay grid must be strictly increasing");
    }

    friend bool operator==(const DelayGrid&, const DelayGrid&) = default;
};

// Pairs counted from a symbol sequence at the given lag.
inline Matrix<std::uint64_t> lagged_joint_counts(std::span<const Symbol> src, std::span<const Symbol> dst,
                                                 std::size_t tau, std::size_t alphabet)
{
    require(src.size() == dst.size(), "pattern sequences differ in length");
    if (src.size() < tau + 1)
        throw LagTooLarge("lag " + std::to_string(tau) + " exceeds sequence length " +
                          std::to_string(src.size()));
    Matrix<std::uint64_t> c(alphabet, alphabet, 0);
    const std::size_t n = src.size() - tau;
    for (std::size_t t = 0; t < n; ++t) {
        require(src[t] < alphabet && dst[t + tau] < alphabet, "symbol exceeds alphabet");
        ++c(src[t], dst[t + tau]);
    }
    return c;
}

namespace detail {

inline double xlog2x(double c) { return c > 0 ? c * std::log2(c) : 0.0; }

// H(Y|X) in bits from joint counts laid out as key-major blocks of size `ny`.
inline double conditional_entropy_from_counts(std::span<const std::uint64_t> joint, std::size_t ny)
{
    double total = 0, sum_joint = 0, sum_marg = 0;
    for (std::size_t k = 0; k < joint.size(); k += ny) {
        std::uint64_t marg = 0;
        for (std::size_t y = 0; y < ny; ++y) {
            marg += joint[k + y];
            sum_joint += xlog2x(static_cast<double>(joint[k + y]));
        }
        sum_marg += xlog2x(static_cast<double>(marg));
        total += static_cast<double>(marg);
    }
    if (total == 0) throw DegenerateSample("no samples in entropy estimate");
    return std::max(0.0, (sum_marg - sum_joint) / total);
}

}  // namespace detail

inline double co_occurrence_entropy(std::span<const Symbol> src, std::span<const Symbol> dst,
                                    std::size_t tau, std::size_t alphabet)
{
    if (src.size() == tau) throw DegenerateSample("no pairs left after lag");
    auto c = lagged_joint_counts(src, dst, tau, alphabet);
    // Matrix is column-major: transpose into src-major blocks.
    std::vector<std::uint64_t> joint(alphabet * alphabet);
    for (std::size_t i = 0; i < alphabet; ++i)
        for (std::size_t j = 0; j < alphabet; ++j) joint[i * alphabet + j] = c(i, j);
    return detail::conditional_entropy_from_counts(joint, alphabet);
}

// values[n, m, j] = H_{tau_j}(X_n | X_m): the candidate link m -> n.
struct CETensor {
    std::size_t N = 0;
    DelayGrid delays;
    double h_max = 0;
    bool thresholded = false;
    std::vector<double> values;

    CETensor() = default;
    CETensor(std::size_t n, DelayGrid grid, double hmax)
        : N(n), delays(std::move(grid)), h_max(hmax), values(N * N * delays.size(), hmax) {}

    std::size_t J() const noexcept { return delays.size(); }
    double& at(std::size_t n, std::size_t m, std::size_t j) { return values[(n * N + m) * J() + j]; }
    double at(std::size_t n, std::size_t m, std::size_t j) const { return values[(n * N + m) * J() + j]; }
};

inline CETensor ce_tensor(const PatternMatrix& pm, const DelayGrid& delays, unsigned threads = 0)
{
    delays.validate();
    const std::size_t N = pm.channels();
    const std::size_t K = pm.alphabet();
    if (delays.max() >= pm.length())
        throw LagTooLarge("largest delay " + std::to_string(delays.max()) +
                          " must be below the pattern count " + std::to_string(pm.length()));
    CETensor h(N, delays, std::log2(static_cast<double>(K)));
    const std::size_t J = delays.size();
    parallel_for(N * N * J, threads, [&](std::size_t cell) {
        const std::size_t j = cell % J;
        const std::size_t m = (cell / J) % N;
        const std::size_t n = cell / (J * N);
        if (n == m) return;
        h.at(n, m, j) = co_occurrence_entropy(pm.channel(m), pm.channel(n), delays[j], K);
    });
    return h;
}

// Entries at or above lambda * H_max collapse to exactly H_max. Reapplying
// with the same lambda changes nothing.
inline CETensor threshold(CETensor h, double lambda)
{
    if (!(lambda > 0 && lambda <= 1))
        throw InvalidLambda("lambda must lie in (0, 1], got " + std::to_string(lambda));
    const double cut = lambda * h.h_max;
    for (double& v : h.values)
        if (v >= cut) v = h.h_max;
    h.thresholded = true;
    return h;
}

// (channel, delay): the channel's pattern `delay` samples before the target's.
struct CondMember {
    std::size_t channel = 0;
    std::size_t delay = 0;
    friend bool operator==(const CondMember&, const CondMember&) = default;
    friend auto operator<=>(const CondMember&, const CondMember&) = default;
};
using ConditioningSet = std::vector<CondMember>;

inline constexpr std::size_t kDefaultConditioningLimit = 3;

// H(target | cond) with the target at t and member (c, delay) at t - delay,
// for t in [window_start, T'). window_start must cover every member delay;
// sharing it between two calls keeps the comparison on identical samples.
inline double conditional_entropy_on_window(const PatternMatrix& pm, std::size_t target,
                                            std::span<const CondMember> cond, std::size_t window_start,
                                            std::size_t r_max = kDefaultConditioningLimit)
{
    if (cond.size() > r_max)
        throw ConditioningTooLarge("conditioning set of size " + std::to_string(cond.size()) +
                                   " exceeds limit " + std::to_string(r_max));
    require(target < pm.channels(), "target channel out of range");
    const std::size_t K = pm.alphabet();
    const std::size_t Tp = pm.length();
    double states = static_cast<double>(K);
    for (const auto& c : cond) {
        require(c.channel < pm.channels(), "conditioning channel out of range");
        require(c.delay <= window_start, "window start must cover every conditioning delay");
        states *= static_cast<double>(K);
    }
    if (states > static_cast<double>(std::numeric_limits<std::uint64_t>::max() / 2))
        throw ConditioningTooLarge("joint alphabet does not fit a 64-bit key");
    if (window_start >= Tp) throw DegenerateSample("conditioning window is empty");
    const std::size_t n = Tp - window_start;
    if (static_cast<double>(n) < 10.0 * states)
        warning_handler()("fewer than 10 samples per joint state in a conditional entropy estimate");

    auto tgt = pm.channel(target);
    std::vector<std::span<const Symbol>> cols;
    for (const auto& c : cond) cols.push_back(pm.channel(c.channel));
    auto key_at = [&](std::size_t t) {
        std::uint64_t key = 0;
        for (std::size_t i = 0; i < cond.size(); ++i) key = key * K + cols[i][t - cond[i].delay];
        return key;
    };

    constexpr double kDenseLimit = 1 << 22;
    if (states <= kDenseLimit) {
        std::vector<std::uint64_t> joint(static_cast<std::size_t>(states), 0);
        for (std::size_t t = window_start; t < Tp; ++t) ++joint[key_at(t) * K + tgt[t]];
        return detail::conditional_entropy_from_counts(joint, K);
    }
    // Sparse path: sort joint keys and read off run lengths.
    std::vector<std::uint64_t> keys(n);
    for (std::size_t t = window_start; t < Tp; ++t) keys[t - window_start] = key_at(t) * K + tgt[t];
    std::sort(keys.begin(), keys.end());
    double sum_joint = 0, sum_marg = 0;
    std::size_t i = 0;
    while (i < n) {
        const std::uint64_t block = keys[i] / K;
        std::uint64_t marg = 0;
        while (i < n && keys[i] / K == block) {
            std::size_t j = i;
            while (j < n && keys[j] == keys[i]) ++j;
            sum_joint += detail::xlog2x(static_cast<double>(j - i));
            marg += j - i;
            i = j;
        }
        sum_marg += detail::xlog2x(static_cast<double>(marg));
    }
    return std::max(0.0, (sum_marg - sum_joint) / static_cast<double>(n));
}

inline std::size_t max_delay(std::span<const CondMember> cond)
{
    std::size_t w = 0;
    for (const auto& c : cond) w = std::max(w, c.delay);
    return w;
}

// Evaluated over the common range where every lagged index exists.
inline double conditional_entropy_given_set(const PatternMatrix& pm, std::size_t target,
                                            std::span<const CondMember> cond,
                                            std::size_t r_max = kDefaultConditioningLimit)
{
    return conditional_entropy_on_window(pm, target, cond, max_delay(cond), r_max);
}

}  // namespace moptn
