#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include <moptn/io.hpp>
#include <moptn/moptn.hpp>

namespace testsupport {

inline std::vector<moptn::Symbol> random_symbols(std::size_t n, std::size_t alphabet, moptn::Rng& rng)
{
    std::vector<moptn::Symbol> s(n);
    for (auto& v : s) v = static_cast<moptn::Symbol>(rng.below(alphabet));
    return s;
}

inline moptn::PatternMatrix pattern_matrix(const std::vector<std::vector<moptn::Symbol>>& cols, std::size_t M)
{
    moptn::PatternMatrix pm{moptn::Matrix<moptn::Symbol>(cols.at(0).size(), cols.size()), {M, 1}};
    for (std::size_t c = 0; c < cols.size(); ++c)
        for (std::size_t t = 0; t < cols[c].size(); ++t) pm.symbols(t, c) = cols[c][t];
    return pm;
}

// Direct summation of -sum_{i,j} p(i,j) log2 p(j|i), one scan per cell.
inline double ce_oracle(const std::vector<moptn::Symbol>& src, const std::vector<moptn::Symbol>& dst, std::size_t tau,
                        std::size_t alphabet)
{
    const std::size_t n = src.size() - tau;
    double h = 0;
    for (std::size_t i = 0; i < alphabet; ++i) {
        double ni = 0;
        for (std::size_t t = 0; t < n; ++t) ni += src[t] == i;
        for (std::size_t j = 0; j < alphabet; ++j) {
            double nij = 0;
            for (std::size_t t = 0; t < n; ++t) nij += src[t] == i && dst[t + tau] == j;
            if (nij > 0) h -= (nij / n) * std::log2(nij / ni);
        }
    }
    return h;
}

// Joint histogram keyed by the tuple of conditioning symbols.
inline double cond_entropy_oracle(const moptn::PatternMatrix& pm, std::size_t target,
                                  const std::vector<moptn::CondMember>& cond, std::size_t start)
{
    std::map<std::vector<int>, double> joint, marg;
    double n = 0;
    for (std::size_t t = start; t < pm.length(); ++t) {
        std::vector<int> key;
        for (const auto& c : cond) key.push_back(pm.symbols(t - c.delay, c.channel));
        marg[key] += 1;
        key.push_back(pm.symbols(t, target));
        joint[key] += 1;
        n += 1;
    }
    double h = 0;
    for (const auto& [key, c] : joint) {
        std::vector<int> k(key.begin(), key.end() - 1);
        h -= (c / n) * std::log2(c / marg[k]);
    }
    return h;
}

}  // namespace testsupport
