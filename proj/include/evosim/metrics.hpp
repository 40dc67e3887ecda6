#pragma once

#include <string>
#include <vector>

#include "evosim/errors.hpp"

namespace evosim {

// Per-round numeric series. Known names: turns_survived, accuracy_<agent>,
// success_count, attempts, expressed_count.
struct MetricSeries {
    std::string name;
    std::vector<double> values;
};

// Trailing mean over a window truncated at the series start; identity at
// window 1. The result is named `<name>_sma<window>`.
inline MetricSeries moving_average(const MetricSeries& s, int window) {
    if (window < 1) throw EvoError(errc::precondition, "smoothing window must be >= 1");
    MetricSeries out;
    out.name = s.name + "_sma" + std::to_string(window);
    out.values.reserve(s.values.size());
    for (size_t i = 0; i < s.values.size(); ++i) {
        size_t begin = i + 1 >= static_cast<size_t>(window) ? i + 1 - static_cast<size_t>(window) : 0;
        double sum = 0.0;
        for (size_t j = begin; j <= i; ++j) sum += s.values[j];
        out.values.push_back(sum / static_cast<double>(i - begin + 1));
    }
    return out;
}

}  // namespace evosim
