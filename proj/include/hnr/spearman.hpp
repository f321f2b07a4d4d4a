#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "hnr/common.hpp"

namespace hnr {

/// Average-rank (fractional) ranks, 1-based; ties share the mean position.
inline std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos + 1;
        while (end < n && values[order[end]] == values[order[pos]]) ++end;
        const double avg = (static_cast<double>(pos + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t k = pos; k < end; ++k) ranks[order[k]] = avg;
        pos = end;
    }
    return ranks;
}

/// Spearman's rank correlation: Pearson correlation of fractional ranks.
inline double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("spearman: length mismatch");
    if (x.size() < 2) throw ValidationError("spearman: need at least 2 observations");

    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;  // fractional ranks always average to this
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw ValidationError("spearman: undefined correlation for constant input");
    }
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace hnr
