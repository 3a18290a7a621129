#include "mixplan/product.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <stdexcept>

#include "mixplan/error.hpp"

namespace mixplan {

ProductAutomaton::ProductAutomaton(std::shared_ptr<const TransitionSystem> ts, std::shared_ptr<const Nba> hard,
                                   std::shared_ptr<const Nba> soft)
    : ts_(std::move(ts)), hard_(std::move(hard)), soft_(std::move(soft)) {
    if (hard_->ap() != ts_->ap() || soft_->ap() != ts_->ap())
        throw ScenarioError("automaton alphabet does not match the workspace propositions");
    n1_ = hard_->num_states();
    n2_ = soft_->num_states();
    size_ = ts_->size() * n1_ * n2_ * 2;
    moves_memo_.resize(static_cast<std::size_t>(size_));
    succ_memo_.resize(static_cast<std::size_t>(size_));
}

ProductAutomaton ProductAutomaton::rebind(std::shared_ptr<const TransitionSystem> ts) const {
    return ProductAutomaton(std::move(ts), hard_, soft_);
}

int ProductAutomaton::index(const ProductState& s) const {
    if (s.pi < 0 || s.pi >= ts_->size() || s.q1 < 0 || s.q1 >= n1_ || s.q2 < 0 || s.q2 >= n2_ ||
        (s.c != 1 && s.c != 2))
        throw UnknownId("malformed product state");
    return ((s.pi * n1_ + s.q1) * n2_ + s.q2) * 2 + (s.c - 1);
}

ProductState ProductAutomaton::state(int index) const {
    if (index < 0 || index >= size_) throw UnknownId("product state index out of range");
    ProductState s;
    s.c = index % 2 + 1;
    index /= 2;
    s.q2 = index % n2_;
    index /= n2_;
    s.q1 = index % n1_;
    s.pi = index / n1_;
    return s;
}

std::string ProductAutomaton::name(int index) const {
    const ProductState s = state(index);
    return "<" + ts_->region(s.pi).id + ",h" + std::to_string(s.q1) + ",s" + std::to_string(s.q2) + "," +
           std::to_string(s.c) + ">";
}

std::vector<int> ProductAutomaton::initial_states() const {
    std::vector<int> out;
    for (int q1 : hard_->initial())
        for (int q2 : soft_->initial()) out.push_back(index({ts_->initial(), q1, q2, 1}));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool ProductAutomaton::is_accepting(int index) const {
    const ProductState s = state(index);
    return s.c == 1 && hard_->is_accepting(s.q1);
}

int ProductAutomaton::next_phase(int q1, int q2, int c) const {
    if (c == 1) return hard_->is_accepting(q1) ? 2 : 1;
    return soft_->is_accepting(q2) ? 1 : 2;
}

CostVector ProductAutomaton::edge_cost(const ProductState& from, const ProductState& to) const {
    index(from);
    index(to);
    CostVector v;
    v.alpha1 = ts_->alpha1(from.pi, to.pi);
    const Label l = ts_->label(from.pi);
    const Guard* g1 = hard_->guard(from.q1, to.q1);
    const Guard* g2 = soft_->guard(from.q2, to.q2);
    const bool hard_ok = g1 && g1->holds(l);
    const bool soft_enabled = g2 && g2->satisfiable();
    const bool phase_ok = to.c == next_phase(from.q1, from.q2, from.c);
    v.alpha2 = hard_ok && soft_enabled && phase_ok ? Cost(0.0) : Cost::infinity();
    v.alpha3 = soft_enabled ? Cost(g2->dist(l)) : Cost::infinity();
    return v;
}

const std::vector<AutomatonMove>& ProductAutomaton::moves(int idx) const {
    const ProductState s = state(idx);
    std::lock_guard lock(memo_mutex_);
    auto& slot = moves_memo_[static_cast<std::size_t>(idx)];
    if (!slot) {
        auto out = std::make_unique<std::vector<AutomatonMove>>();
        const Label l = ts_->label(s.pi);
        const int c2 = next_phase(s.q1, s.q2, s.c);
        for (const NbaEdge& e1 : hard_->out(s.q1)) {
            if (!e1.guard.holds(l)) continue;
            for (const NbaEdge& e2 : soft_->out(s.q2)) {
                if (!e2.guard.satisfiable()) continue;
                out->push_back({e1.dst, e2.dst, c2, e2.guard.dist(l)});
            }
        }
        std::sort(out->begin(), out->end(), [](const AutomatonMove& a, const AutomatonMove& b) {
            return std::tie(a.q1, a.q2) < std::tie(b.q1, b.q2);
        });
        slot = std::move(out);
    }
    return *slot;
}

const std::vector<ProductEdge>& ProductAutomaton::successors(int idx) const {
    const ProductState s = state(idx);
    const auto& mv = moves(idx);
    std::lock_guard lock(memo_mutex_);
    auto& slot = succ_memo_[static_cast<std::size_t>(idx)];
    if (!slot) {
        auto out = std::make_unique<std::vector<ProductEdge>>();
        for (int to_pi : ts_->neighbors(s.pi)) {
            const Cost a1 = ts_->alpha1(s.pi, to_pi);
            for (const AutomatonMove& m : mv)
                out->push_back({index({to_pi, m.q1, m.q2, m.c}), CostVector{a1, Cost(0.0), Cost(m.alpha3)}});
        }
        std::sort(out->begin(), out->end(), [](const ProductEdge& a, const ProductEdge& b) { return a.to < b.to; });
        slot = std::move(out);
    }
    return *slot;
}

std::vector<int> advance(const ProductAutomaton& pa, const std::vector<int>& states, int region) {
    std::set<int> next;
    for (int q : states)
        for (const AutomatonMove& m : pa.moves(q)) next.insert(pa.index({region, m.q1, m.q2, m.c}));
    return {next.begin(), next.end()};
}

std::vector<int> reachable_states(const ProductAutomaton& pa, const std::vector<int>& history) {
    if (history.empty() || history.front() != pa.ts().initial())
        throw std::invalid_argument("history must start at the initial region");
    std::vector<int> belief = pa.initial_states();
    for (std::size_t i = 1; i < history.size() && !belief.empty(); ++i) belief = advance(pa, belief, history[i]);
    return belief;
}

TrapSet trap_set(const ProductAutomaton& pa, const std::vector<int>& candidates, double beta) {
    // Forward closure of the candidates over finite-cost edges.
    std::vector<int> order;
    std::vector<char> seen(static_cast<std::size_t>(pa.size()));
    std::deque<int> queue;
    for (int q : candidates)
        if (!seen[static_cast<std::size_t>(q)]) {
            seen[static_cast<std::size_t>(q)] = 1;
            queue.push_back(q);
        }
    while (!queue.empty()) {
        const int q = queue.front();
        queue.pop_front();
        order.push_back(q);
        for (const ProductEdge& e : pa.successors(q))
            if (!seen[static_cast<std::size_t>(e.to)]) {
                seen[static_cast<std::size_t>(e.to)] = 1;
                queue.push_back(e.to);
            }
    }
    // Accepting states lying on a cycle, via strongly connected components of the closure.
    const std::size_t n = static_cast<std::size_t>(pa.size());
    std::vector<int> comp(n, -1), low(n, 0), num(n, -1), stack;
    std::vector<char> on_stack(n);
    std::vector<int> comp_size;
    int counter = 0;
    for (int root : order) {
        if (num[static_cast<std::size_t>(root)] >= 0) continue;
        std::vector<std::pair<int, std::size_t>> work{{root, 0}};
        while (!work.empty()) {
            auto& [v, i] = work.back();
            const std::size_t vs = static_cast<std::size_t>(v);
            if (i == 0 && num[vs] < 0) {
                num[vs] = low[vs] = counter++;
                stack.push_back(v);
                on_stack[vs] = 1;
            }
            const auto& succ = pa.successors(v);
            if (i < succ.size()) {
                const int w = succ[i++].to;
                const std::size_t ws = static_cast<std::size_t>(w);
                if (num[ws] < 0) {
                    work.push_back({w, 0});
                } else if (on_stack[ws]) {
                    low[vs] = std::min(low[vs], num[ws]);
                }
                continue;
            }
            if (low[vs] == num[vs]) {
                const int id = static_cast<int>(comp_size.size());
                comp_size.push_back(0);
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    comp[static_cast<std::size_t>(w)] = id;
                    ++comp_size.back();
                } while (w != v);
            }
            const int low_v = low[vs];
            work.pop_back();
            if (!work.empty()) {
                const std::size_t ps = static_cast<std::size_t>(work.back().first);
                low[ps] = std::min(low[ps], low_v);
            }
        }
    }
    auto on_cycle = [&](int q) {
        if (comp_size[static_cast<std::size_t>(comp[static_cast<std::size_t>(q)])] > 1) return true;
        for (const ProductEdge& e : pa.successors(q))
            if (e.to == q) return true;
        return false;
    };

    // Backward sweep from those accepting states.
    std::vector<std::vector<int>> pred(n);
    for (int q : order)
        for (const ProductEdge& e : pa.successors(q)) pred[static_cast<std::size_t>(e.to)].push_back(q);
    std::vector<char> live(n);
    for (int q : order)
        if (pa.is_accepting(q) && on_cycle(q)) {
            live[static_cast<std::size_t>(q)] = 1;
            queue.push_back(q);
        }
    while (!queue.empty()) {
        const int q = queue.front();
        queue.pop_front();
        for (int p : pred[static_cast<std::size_t>(q)])
            if (!live[static_cast<std::size_t>(p)]) {
                live[static_cast<std::size_t>(p)] = 1;
                queue.push_back(p);
            }
    }
    TrapSet t{{}, pa.ts_revision(), beta};
    for (int q : candidates)
        if (!live[static_cast<std::size_t>(q)]) t.states.push_back(q);
    std::sort(t.states.begin(), t.states.end());
    t.states.erase(std::unique(t.states.begin(), t.states.end()), t.states.end());
    return t;
}

TrapRegions trap_regions(const ProductAutomaton& pa, const std::vector<int>& belief, double beta) {
    TrapRegions out;
    std::set<int> cand;
    for (int q : belief) {
        const int here = pa.state(q).pi;
        for (int r = 0; r < pa.ts().size(); ++r) {
            if (r == here) continue;
            for (const AutomatonMove& m : pa.moves(q)) cand.insert(pa.index({r, m.q1, m.q2, m.c}));
        }
    }
    out.candidates.assign(cand.begin(), cand.end());
    out.traps = trap_set(pa, out.candidates, beta);
    std::vector<int> total(static_cast<std::size_t>(pa.ts().size()));
    std::vector<int> trapped(static_cast<std::size_t>(pa.ts().size()));
    for (int q : out.candidates) ++total[static_cast<std::size_t>(pa.state(q).pi)];
    for (int q : out.traps.states) ++trapped[static_cast<std::size_t>(pa.state(q).pi)];
    for (int r = 0; r < pa.ts().size(); ++r)
        if (total[static_cast<std::size_t>(r)] > 0 && total[static_cast<std::size_t>(r)] == trapped[static_cast<std::size_t>(r)])
            out.regions.push_back(r);
    return out;
}

nlohmann::json reachable_graph_json(const ProductAutomaton& pa) {
    using nlohmann::json;
    std::vector<int> order;
    std::vector<char> seen(static_cast<std::size_t>(pa.size()));
    std::deque<int> queue;
    for (int q : pa.initial_states()) {
        seen[static_cast<std::size_t>(q)] = 1;
        queue.push_back(q);
    }
    while (!queue.empty()) {
        const int q = queue.front();
        queue.pop_front();
        order.push_back(q);
        for (const ProductEdge& e : pa.successors(q))
            if (!seen[static_cast<std::size_t>(e.to)]) {
                seen[static_cast<std::size_t>(e.to)] = 1;
                queue.push_back(e.to);
            }
    }
    json nodes = json::array();
    json edges = json::array();
    for (int q : order) {
        nodes.push_back({{"id", pa.name(q)}, {"initial", false}, {"accepting", pa.is_accepting(q)}});
        for (const ProductEdge& e : pa.successors(q))
            edges.push_back({{"src", pa.name(q)},
                             {"dst", pa.name(e.to)},
                             {"cost", {e.cost.alpha1.as_double(), e.cost.alpha2.as_double(), e.cost.alpha3.as_double()}}});
    }
    for (int q : pa.initial_states())
        for (auto& n : nodes)
            if (n["id"] == pa.name(q)) n["initial"] = true;
    return {{"ts_revision", pa.ts_revision()}, {"nodes", nodes}, {"edges", edges}};
}

std::shared_ptr<ProductAutomaton> make_product(const Scenario& s) {
    return std::make_shared<ProductAutomaton>(std::make_shared<const TransitionSystem>(s.ts),
                                              to_nba(ltl::normalize(s.phi_hard), s.ts.ap()),
                                              to_nba(ltl::normalize(s.phi_soft), s.ts.ap()));
}

}  // namespace mixplan
