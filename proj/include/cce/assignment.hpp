#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace cce {

// Weight carried through the assignment solver: a real-valued cost plus an
// integer tie-break channel. Ordering is lexicographic, so the solver
// minimizes total cost first and total tie-break second. Componentwise
// addition keeps the pair a totally ordered group, which is all the
// shortest-augmenting-path argument requires.
struct SolverWeight {
    double primary = 0.0;
    std::int64_t tiebreak = 0;

    // Sentinel used only for "no candidate yet" slots inside the solver; the
    // tie-break stays 0 so subtracting finite deltas can never overflow.
    static SolverWeight unresolved() {
        return {std::numeric_limits<double>::infinity(), 0};
    }

    SolverWeight& operator+=(const SolverWeight& o) {
        primary += o.primary;
        tiebreak += o.tiebreak;
        return *this;
    }
    SolverWeight& operator-=(const SolverWeight& o) {
        primary -= o.primary;
        tiebreak -= o.tiebreak;
        return *this;
    }
    friend SolverWeight operator+(SolverWeight a, const SolverWeight& b) { return a += b; }
    friend SolverWeight operator-(SolverWeight a, const SolverWeight& b) { return a -= b; }
    friend bool operator==(const SolverWeight& a, const SolverWeight& b) {
        return a.primary == b.primary && a.tiebreak == b.tiebreak;
    }
    friend bool operator<(const SolverWeight& a, const SolverWeight& b) {
        if (a.primary != b.primary) return a.primary < b.primary;
        return a.tiebreak < b.tiebreak;
    }
};

struct AssignmentResult {
    std::vector<int> col_of_row;  // col_of_row[i] = column assigned to row i
    SolverWeight total;
};

// Minimum-weight perfect assignment on a square matrix via shortest
// augmenting paths with potentials (Jonker-Volgenant style, O(n^3)).
// All cells must be finite; callers model forbidden cells with a surrogate
// weight strictly larger than any achievable total plus a side flag.
AssignmentResult solve_assignment(const std::vector<std::vector<SolverWeight>>& cost);

} // namespace cce
