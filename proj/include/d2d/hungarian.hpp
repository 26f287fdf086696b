#pragma once
#include <cmath>
#include <limits>
#include <vector>

#include "d2d/errors.hpp"

namespace d2d {

struct MatchingResult {
    std::vector<int> col_of_row;  // col_of_row[r] = column matched to row r
    double total_weight = 0.0;
};

// Maximum-weight perfect matching on a square weight matrix, O(n^3)
// shortest-augmenting-path Hungarian (rows scanned in order, first-found
// optimum, so results are deterministic). Potentials only ever add and
// subtract matrix entries, so integer-valued weights stay exact.
inline MatchingResult max_weight_assignment(const std::vector<std::vector<double>>& weight) {
    const int n = static_cast<int>(weight.size());
    for (const auto& row : weight) {
        if (static_cast<int>(row.size()) != n)
            throw InputError("assignment matrix must be square");
        for (double w : row)
            if (!std::isfinite(w)) throw InputError("assignment matrix entries must be finite");
    }
    MatchingResult res;
    if (n == 0) return res;

    const double inf = std::numeric_limits<double>::infinity();
    // Minimize cost = -weight. 1-based with a virtual 0 row/column.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match_col(n + 1, 0);  // match_col[j] = row matched to column j
    std::vector<int> way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        match_col[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match_col[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = -weight[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match_col[j0] != 0);
        do {
            const int j1 = way[j0];
            match_col[j0] = match_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    res.col_of_row.assign(n, -1);
    for (int j = 1; j <= n; ++j) res.col_of_row[match_col[j] - 1] = j - 1;
    for (int i = 0; i < n; ++i) res.total_weight += weight[i][res.col_of_row[i]];
    return res;
}

}  // namespace d2d
