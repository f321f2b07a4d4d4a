#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hnr/common.hpp"

namespace hnr {

struct HtLevel {
    int level = 1;                  // 1-based division count
    std::vector<std::size_t> head;  // item indices strictly above the mean
    std::vector<std::size_t> tail;  // the rest of the set split at this level
};

struct HtPartition {
    std::vector<HtLevel> levels;
    std::vector<double> source_values;

    bool has_split() const {
        return !levels.empty() && !levels.front().head.empty();
    }
    int depth() const { return has_split() ? levels.back().level : 0; }
};

/// Recursive mean partition of heavy-tailed values. A level is kept only if
/// its head is non-empty and takes at most head_fraction_cap of the current
/// set; recursion walks into the head while it has >= 2 members and fewer
/// than max_levels divisions were made. Constant data yields a single level
/// with an empty head.
inline HtPartition head_tail_breaks(std::span<const double> values,
                                    double head_fraction_cap = 0.4,
                                    int max_levels = std::numeric_limits<int>::max()) {
    if (values.size() < 2) {
        throw ValidationError("head_tail_breaks: need at least 2 values");
    }
    if (!(head_fraction_cap > 0.0)) {
        throw ValidationError("head_tail_breaks: head_fraction_cap must be positive");
    }

    HtPartition part;
    part.source_values.assign(values.begin(), values.end());

    std::vector<std::size_t> current(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) current[i] = i;

    int level = 1;
    while (true) {
        double mean = 0.0;
        for (std::size_t i : current) mean += values[i];
        mean /= static_cast<double>(current.size());

        HtLevel lvl;
        lvl.level = level;
        for (std::size_t i : current) {
            (values[i] > mean ? lvl.head : lvl.tail).push_back(i);
        }

        const double fraction = static_cast<double>(lvl.head.size()) /
                                static_cast<double>(current.size());
        if (lvl.head.empty() || fraction > head_fraction_cap) {
            if (part.levels.empty()) {
                // no usable split at all: single level, empty head
                lvl.head.clear();
                lvl.tail = current;
                part.levels.push_back(std::move(lvl));
            }
            break;
        }

        part.levels.push_back(lvl);
        if (lvl.head.size() < 2 || level >= max_levels) break;
        current = std::move(lvl.head);
        ++level;
    }
    return part;
}

}  // namespace hnr
