#include "divret/optimizer.hpp"

#include "divret/error.hpp"

#include <algorithm>

namespace divret {

std::vector<std::string> SelectionTrace::ids() const {
    std::vector<std::string> out;
    out.reserve(picks.size());
    for (const auto& p : picks) out.push_back(p.id);
    return out;
}

std::vector<std::size_t> SelectionTrace::positions() const {
    std::vector<std::size_t> out;
    out.reserve(picks.size());
    for (const auto& p : picks) out.push_back(p.position);
    return out;
}

bool wins_tie(const ObjectiveContext::Item& a, const ObjectiveContext::Item& b) {
    if (a.prompt_sim != b.prompt_sim) return a.prompt_sim > b.prompt_sim;
    return a.ingest_index < b.ingest_index;
}

namespace {

bool better(const ObjectiveContext& ctx, double gain_a, std::size_t a, double gain_b, std::size_t b) {
    if (gain_a != gain_b) return gain_a > gain_b;
    return wins_tie(ctx[a], ctx[b]);
}

void record(SelectionTrace& trace, const ObjectiveContext& ctx, SelectionState& state, std::size_t pos) {
    const double g = state.add(pos);
    trace.objective_value += g;
    trace.picks.push_back({ctx[pos].id, pos, g, trace.objective_value});
}

}  // namespace

SelectionTrace greedy_select(const ObjectiveContext& ctx, std::size_t n, SelectionStats* stats) {
    if (n < 1) throw PreconditionError("greedy_select: n must be at least 1");
    SelectionTrace trace;
    SelectionState state(ctx);
    SelectionStats local;
    const auto rounds = std::min(n, ctx.size());
    for (std::size_t round = 0; round < rounds; ++round) {
        std::size_t best = ctx.size();
        double best_gain = 0.0;
        for (std::size_t v = 0; v < ctx.size(); ++v) {
            if (state.contains(v)) continue;
            const double g = state.gain(v);
            ++local.gain_evaluations;
            if (best == ctx.size() || better(ctx, g, v, best_gain, best)) {
                best = v;
                best_gain = g;
            }
        }
        if (best_gain < 0.0) {
            trace.stopped_early = true;
            break;
        }
        record(trace, ctx, state, best);
    }
    if (stats) *stats = local;
    return trace;
}

SelectionTrace lazy_greedy_select(const ObjectiveContext& ctx, std::size_t n, SelectionStats* stats) {
    if (n < 1) throw PreconditionError("lazy_greedy_select: n must be at least 1");
    struct Entry {
        double gain;
        std::size_t pos;
        std::size_t round;  // round in which gain was computed
    };
    // Heap order is the greedy preference order. A stale gain only overestimates
    // the fresh one and the tie keys never change, so a fresh top dominates.
    const auto lower = [&ctx](const Entry& a, const Entry& b) { return better(ctx, b.gain, b.pos, a.gain, a.pos); };

    SelectionTrace trace;
    SelectionState state(ctx);
    SelectionStats local;
    std::vector<Entry> heap;
    heap.reserve(ctx.size());
    for (std::size_t v = 0; v < ctx.size(); ++v) {
        heap.push_back({state.gain(v), v, 0});
        ++local.gain_evaluations;
    }
    std::make_heap(heap.begin(), heap.end(), lower);

    const auto rounds = std::min(n, ctx.size());
    for (std::size_t round = 0; round < rounds && !trace.stopped_early; ++round) {
        for (;;) {
            std::pop_heap(heap.begin(), heap.end(), lower);
            Entry top = heap.back();
            heap.pop_back();
            if (top.round != round) {
                top.gain = state.gain(top.pos);
                top.round = round;
                ++local.gain_evaluations;
                ++local.stale_reevaluations;
                if (!heap.empty() && lower(top, heap.front())) {
                    heap.push_back(top);
                    std::push_heap(heap.begin(), heap.end(), lower);
                    continue;
                }
            }
            if (top.gain < 0.0) {
                trace.stopped_early = true;
            } else {
                record(trace, ctx, state, top.pos);
            }
            break;
        }
    }
    if (stats) *stats = local;
    return trace;
}

OracleResult brute_force_optimal(const ObjectiveContext& ctx, std::size_t n) {
    if (ctx.size() > kOracleMaxCandidates || n > kOracleMaxSelection) {
        throw PreconditionError("brute_force_optimal: instance exceeds the oracle guard (" +
                                std::to_string(ctx.size()) + " candidates, n = " + std::to_string(n) + "; limits " +
                                std::to_string(kOracleMaxCandidates) + " / " + std::to_string(kOracleMaxSelection) +
                                ")");
    }
    const auto sorted_ids = [&ctx](const std::vector<std::size_t>& subset) {
        std::vector<std::string> ids;
        for (auto p : subset) ids.push_back(ctx[p].id);
        std::sort(ids.begin(), ids.end());
        return ids;
    };

    OracleResult best;
    best.value = objective(ctx, std::span<const std::size_t>{});
    std::vector<std::size_t> subset;
    const auto k_max = std::min(n, ctx.size());

    // Depth-first enumeration of every ascending position list of length <= k_max.
    auto visit = [&](auto&& self, std::size_t start) -> void {
        if (!subset.empty()) {
            const double value = objective(ctx, subset);
            if (value > best.value || (value == best.value && sorted_ids(subset) < best.ids)) {
                best.value = value;
                best.positions = subset;
                best.ids = sorted_ids(subset);
            }
        }
        if (subset.size() == k_max) return;
        for (std::size_t v = start; v < ctx.size(); ++v) {
            subset.push_back(v);
            self(self, v + 1);
            subset.pop_back();
        }
    };
    visit(visit, 0);
    return best;
}

AuditResult approximation_audit(const ObjectiveContext& ctx, std::size_t n) {
    const auto optimum = brute_force_optimal(ctx, n);
    AuditResult audit;
    audit.optimal_value = optimum.value;
    audit.greedy_value = objective(ctx, greedy_select(ctx, n).positions());
    if (optimum.value > 0.0) audit.ratio = audit.greedy_value / optimum.value;
    return audit;
}

}  // namespace divret
