#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <vector>

#include "dipole/expansion.hpp"

namespace dipole::test {

// Bundles are expensive enough to share across tests in one process.
inline const ExpansionBundle& bundle(int order) {
    static std::map<int, std::unique_ptr<ExpansionBundle>> cache;
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<ExpansionBundle>(build_bundle(GridSpec{}, order));
    return *slot;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0.0;
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) e = std::max(e, std::abs(a[i] - b[i]));
    return e;
}

}  // namespace dipole::test
