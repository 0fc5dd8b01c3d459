// Optimal one-to-one assignment (Hungarian algorithm, potentials variant).
// Used both for global-nearest-neighbor track association and for
// detection/ground-truth matching in the evaluator.
#pragma once

#include <limits>
#include <vector>

namespace tunradar {

// Minimizes total cost over one-to-one assignments of rows to columns.
// cost is row-major n_rows x n_cols. Returns, per row, the assigned column
// or -1; when n_rows > n_cols the surplus rows stay unassigned. All of
// min(n_rows, n_cols) assignments are made, so callers with gating must
// post-filter pairs whose cost exceeds the gate.
inline std::vector<int> solve_assignment(const std::vector<double>& cost, int n_rows, int n_cols) {
    if (n_rows == 0 || n_cols == 0) return std::vector<int>(static_cast<size_t>(n_rows), -1);

    const bool transposed = n_rows > n_cols;
    const int n = transposed ? n_cols : n_rows;
    const int m = transposed ? n_rows : n_cols;
    const auto at = [&](int r, int c) -> double {
        return transposed ? cost[static_cast<size_t>(c) * n_cols + r]
                          : cost[static_cast<size_t>(r) * n_cols + c];
    };

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(m) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(m) + 1, 0), way(static_cast<size_t>(m) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(m) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(m) + 1, false);
        do {
            used[static_cast<size_t>(j0)] = true;
            const int i0 = p[static_cast<size_t>(j0)];
            double delta = kInf;
            int j1 = -1;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = at(i0 - 1, j - 1) - u[static_cast<size_t>(i0)] -
                                   v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (p[static_cast<size_t>(j)] > 0) row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    }
    if (!transposed) return row_to_col;

    std::vector<int> out(static_cast<size_t>(n_rows), -1);
    for (int c = 0; c < n; ++c) {
        if (row_to_col[static_cast<size_t>(c)] >= 0) out[static_cast<size_t>(row_to_col[static_cast<size_t>(c)])] = c;
    }
    return out;
}

}  // namespace tunradar
