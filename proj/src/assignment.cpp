#include "cce/assignment.hpp"

#include <cassert>

namespace cce {

AssignmentResult solve_assignment(const std::vector<std::vector<SolverWeight>>& cost) {
    const int n = static_cast<int>(cost.size());
    AssignmentResult result;
    result.col_of_row.assign(static_cast<std::size_t>(n), -1);
    if (n == 0) return result;
    for (const auto& row : cost) assert(static_cast<int>(row.size()) == n);

    // Index n acts as the virtual column through which each row is inserted.
    std::vector<SolverWeight> u(static_cast<std::size_t>(n) + 1);
    std::vector<SolverWeight> v(static_cast<std::size_t>(n) + 1);
    std::vector<int> matched_row(static_cast<std::size_t>(n) + 1, -1);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, n);

    for (int i = 0; i < n; ++i) {
        matched_row[static_cast<std::size_t>(n)] = i;
        int j0 = n;
        std::vector<SolverWeight> min_reduced(static_cast<std::size_t>(n) + 1,
                                              SolverWeight::unresolved());
        std::vector<char> visited(static_cast<std::size_t>(n) + 1, 0);
        do {
            visited[static_cast<std::size_t>(j0)] = 1;
            int i0 = matched_row[static_cast<std::size_t>(j0)];
            int j_next = -1;
            SolverWeight delta = SolverWeight::unresolved();
            for (int j = 0; j < n; ++j) {
                if (visited[static_cast<std::size_t>(j)]) continue;
                SolverWeight reduced = cost[static_cast<std::size_t>(i0)][static_cast<std::size_t>(j)] -
                                       u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (reduced < min_reduced[static_cast<std::size_t>(j)]) {
                    min_reduced[static_cast<std::size_t>(j)] = reduced;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (min_reduced[static_cast<std::size_t>(j)] < delta) {
                    delta = min_reduced[static_cast<std::size_t>(j)];
                    j_next = j;
                }
            }
            assert(j_next != -1);
            for (int j = 0; j <= n; ++j) {
                if (visited[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(matched_row[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    min_reduced[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j_next;
        } while (matched_row[static_cast<std::size_t>(j0)] != -1);
        // Walk the alternating path back to the virtual column, flipping matches.
        do {
            int j_prev = way[static_cast<std::size_t>(j0)];
            matched_row[static_cast<std::size_t>(j0)] = matched_row[static_cast<std::size_t>(j_prev)];
            j0 = j_prev;
        } while (j0 != n);
    }

    for (int j = 0; j < n; ++j) {
        int i = matched_row[static_cast<std::size_t>(j)];
        result.col_of_row[static_cast<std::size_t>(i)] = j;
        result.total += cost[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return result;
}

} // namespace cce
