#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace cfproto {

// sum(coeffs) + constant  {=, <=, !=}  0   over integer variables 0..n-1
struct LinCon {
    enum Kind { Eq, Le, Ne } kind = Le;
    std::map<int, std::int64_t> coeffs;
    std::int64_t constant = 0;
};

// Exact integer satisfiability for conjunctions of linear constraints (Omega test:
// equality elimination, exact/dark-shadow Fourier-Motzkin, splinters, lazy
// disequality splitting). Returns a model on success.
class LiaSolver {
public:
    std::optional<std::vector<std::int64_t>> solve(const std::vector<LinCon>& cs, int nvars);
    std::uint64_t steps() const { return steps_; }

private:
    std::optional<std::vector<std::int64_t>> solve_rec(std::vector<LinCon> cs, int nvars, int depth);
    std::optional<std::vector<std::int64_t>> solve_ineqs(std::vector<LinCon> cs, int nvars, int depth);
    std::uint64_t steps_ = 0;
};

}  // namespace cfproto
