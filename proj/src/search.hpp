#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <tuple>
#include <vector>

#include "mixplan/product.hpp"

namespace mixplan::detail {

// Dijkstra ordered by (cost, hops, state sequence). Seeds are (state, cost, hops) entries
// without a parent; edge weights must be non-negative.
struct Search {
    using Weight = std::function<double(int, const ProductEdge&)>;
    const ProductAutomaton& pa;
    Weight weight;
    std::vector<double> cost;
    std::vector<int> hops;
    std::vector<int> parent;  // -1 at a seed
    std::vector<char> done;

    Search(const ProductAutomaton& p, Weight w)
        : pa(p),
          weight(std::move(w)),
          cost(static_cast<std::size_t>(p.size()), std::numeric_limits<double>::infinity()),
          hops(static_cast<std::size_t>(p.size()), 0),
          parent(static_cast<std::size_t>(p.size()), -1),
          done(static_cast<std::size_t>(p.size()), 0) {}

    std::vector<int> path(int v) const {
        std::vector<int> out;
        for (; v >= 0; v = parent[static_cast<std::size_t>(v)]) out.push_back(v);
        std::reverse(out.begin(), out.end());
        return out;
    }

    // Would reaching v via u (label cu, hu) beat v's current label?
    bool better(int v, double c, int h, int u) const {
        const std::size_t vs = static_cast<std::size_t>(v);
        if (c != cost[vs]) return c < cost[vs];
        if (h != hops[vs]) return h < hops[vs];
        const int pv = parent[vs];
        if (pv == u) return false;
        if (u < 0 || pv < 0) return u < pv;  // only seeds have no parent; seeds are unique
        return path(u) < path(pv);
    }

    void run(const std::vector<std::tuple<int, double, int>>& seeds, double cutoff = std::numeric_limits<double>::infinity()) {
        using Key = std::tuple<double, int, int>;
        std::priority_queue<Key, std::vector<Key>, std::greater<>> pq;
        for (auto [s, c, h] : seeds) {
            const std::size_t ss = static_cast<std::size_t>(s);
            if (c < cost[ss] || (c == cost[ss] && h < hops[ss])) {
                cost[ss] = c;
                hops[ss] = h;
                parent[ss] = -1;
            }
        }
        for (auto [s, c, h] : seeds) pq.push({cost[static_cast<std::size_t>(s)], hops[static_cast<std::size_t>(s)], s});
        while (!pq.empty()) {
            auto [c, h, u] = pq.top();
            pq.pop();
            const std::size_t us = static_cast<std::size_t>(u);
            if (done[us] || c != cost[us] || h != hops[us]) continue;
            if (c > cutoff) break;
            done[us] = 1;
            for (const ProductEdge& e : pa.successors(u)) {
                const std::size_t vs = static_cast<std::size_t>(e.to);
                if (done[vs]) continue;
                const double nc = c + weight(u, e);
                if (better(e.to, nc, h + 1, u)) {
                    cost[vs] = nc;
                    hops[vs] = h + 1;
                    parent[vs] = u;
                    pq.push({nc, h + 1, e.to});
                }
            }
        }
    }
};

}  // namespace mixplan::detail
