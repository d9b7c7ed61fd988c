#pragma once

#include "divret/objective.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace divret {

struct Pick {
    std::string id;
    std::size_t position = 0;  // index into the ObjectiveContext
    double gain = 0.0;
    double running_objective = 0.0;

    friend bool operator==(const Pick&, const Pick&) = default;
};

/// Ordered greedy picks. running_objective is the prefix sum of gains.
struct SelectionTrace {
    std::vector<Pick> picks;
    double objective_value = 0.0;
    bool stopped_early = false;

    std::vector<std::string> ids() const;
    std::vector<std::size_t> positions() const;

    friend bool operator==(const SelectionTrace&, const SelectionTrace&) = default;
};

/// Work counters, kept out of the trace so greedy variants stay comparable.
struct SelectionStats {
    std::size_t gain_evaluations = 0;
    std::size_t stale_reevaluations = 0;
};

/// True when candidate a beats b at equal marginal gain: higher prompt
/// similarity first, then lower ingest index.
bool wins_tie(const ObjectiveContext::Item& a, const ObjectiveContext::Item& b);

/// Plain greedy: every round evaluates every unselected candidate and takes the
/// best by (gain, tie-break). Stops after n picks, when candidates run out, or
/// when the best gain is negative.
SelectionTrace greedy_select(const ObjectiveContext& ctx, std::size_t n, SelectionStats* stats = nullptr);

/// Lazy greedy over a max-heap of stale gains. Produces exactly the trace of
/// greedy_select, including tie-breaks.
SelectionTrace lazy_greedy_select(const ObjectiveContext& ctx, std::size_t n, SelectionStats* stats = nullptr);

struct OracleResult {
    std::vector<std::size_t> positions;  // ascending
    std::vector<std::string> ids;        // sorted
    double value = 0.0;
};

inline constexpr std::size_t kOracleMaxCandidates = 22;
inline constexpr std::size_t kOracleMaxSelection = 6;

/// Exhaustive maximum of the objective over all subsets of size <= n, ties
/// resolved to the lexicographically least sorted id list. Throws
/// PreconditionError beyond kOracleMaxCandidates / kOracleMaxSelection.
OracleResult brute_force_optimal(const ObjectiveContext& ctx, std::size_t n);

struct AuditResult {
    double greedy_value = 0.0;
    double optimal_value = 0.0;
    /// greedy / optimal; empty when optimal_value <= 0 and the audit is skipped.
    std::optional<double> ratio;
};

AuditResult approximation_audit(const ObjectiveContext& ctx, std::size_t n);

/// 1 - 1/e.
inline constexpr double kGreedyGuarantee = 0.63212055882855767;

}  // namespace divret
