#include "parse/edmonds.hpp"

#include <cmath>
#include <limits>

#include "common/error.hpp"

namespace pixeltext {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Recursive greedy-contract implementation over a dense matrix. Node 0 is
// the root; returns best head per non-root node.
std::vector<std::size_t> cle(const ArcMatrix& scores) {
    std::size_t m = scores.size();
    std::vector<std::size_t> head(m, 0);
    for (std::size_t v = 1; v < m; ++v) {
        double best = kNegInf;
        std::size_t best_u = m;
        for (std::size_t u = 0; u < m; ++u) {
            if (u == v) {
                continue;
            }
            if (scores[u][v] > best) {
                best = scores[u][v];
                best_u = u;
            }
        }
        if (best_u == m || std::isinf(best)) {
            throw DataError("decode_tree: node " + std::to_string(v) +
                            " has no permitted incoming arc");
        }
        head[v] = best_u;
    }

    // Cycle detection over the greedy selection.
    std::vector<int> color(m, 0);  // 0 unseen, 1 on path, 2 done
    std::vector<std::size_t> cycle;
    color[0] = 2;
    for (std::size_t start = 1; start < m && cycle.empty(); ++start) {
        if (color[start] != 0) {
            continue;
        }
        std::size_t v = start;
        std::vector<std::size_t> path;
        while (color[v] == 0) {
            color[v] = 1;
            path.push_back(v);
            v = head[v];
        }
        if (color[v] == 1) {
            // Found a cycle: collect from v around.
            std::size_t w = v;
            do {
                cycle.push_back(w);
                w = head[w];
            } while (w != v);
        }
        for (std::size_t node : path) {
            color[node] = 2;
        }
    }
    if (cycle.empty()) {
        return head;
    }

    // Contract the cycle into one node and recurse.
    std::vector<bool> in_cycle(m, false);
    for (std::size_t v : cycle) {
        in_cycle[v] = true;
    }
    std::vector<std::size_t> old_to_new(m, 0);
    std::vector<std::size_t> new_to_old;
    for (std::size_t v = 0; v < m; ++v) {
        if (!in_cycle[v]) {
            old_to_new[v] = new_to_old.size();
            new_to_old.push_back(v);
        }
    }
    std::size_t contracted = new_to_old.size();  // index of the cycle node
    for (std::size_t v : cycle) {
        old_to_new[v] = contracted;
    }
    std::size_t mm = contracted + 1;

    ArcMatrix sub(mm, std::vector<double>(mm, kNegInf));
    // For arcs into the contracted node remember which cycle member receives
    // them; for arcs out of it, which member emits them.
    std::vector<std::size_t> enter_rep(mm, 0);
    std::vector<std::size_t> leave_rep(mm, 0);
    for (std::size_t u = 0; u < m; ++u) {
        for (std::size_t v = 1; v < m; ++v) {
            if (u == v || std::isinf(scores[u][v])) {
                continue;
            }
            if (!in_cycle[u] && !in_cycle[v]) {
                sub[old_to_new[u]][old_to_new[v]] = scores[u][v];
            } else if (!in_cycle[u] && in_cycle[v]) {
                double adjusted = scores[u][v] - scores[head[v]][v];
                if (adjusted > sub[old_to_new[u]][contracted]) {
                    sub[old_to_new[u]][contracted] = adjusted;
                    enter_rep[old_to_new[u]] = v;
                }
            } else if (in_cycle[u] && !in_cycle[v]) {
                if (scores[u][v] > sub[contracted][old_to_new[v]]) {
                    sub[contracted][old_to_new[v]] = scores[u][v];
                    leave_rep[old_to_new[v]] = u;
                }
            }
        }
    }

    std::vector<std::size_t> sub_head = cle(sub);

    std::vector<std::size_t> result(m, 0);
    for (std::size_t v = 1; v < m; ++v) {
        if (in_cycle[v]) {
            result[v] = head[v];  // provisional: cycle arc, one gets broken below
        }
    }
    for (std::size_t nv = 1; nv < mm; ++nv) {
        std::size_t nu = sub_head[nv];
        if (nv == contracted) {
            // The arc entering the cycle: break the cycle at its receiver.
            std::size_t receiver = enter_rep[nu];
            result[receiver] = new_to_old[nu];
        } else if (nu == contracted) {
            result[new_to_old[nv]] = leave_rep[nv];
        } else {
            result[new_to_old[nv]] = new_to_old[nu];
        }
    }
    return result;
}

std::size_t root_children(const std::vector<std::size_t>& head) {
    std::size_t count = 0;
    for (std::size_t v = 1; v < head.size(); ++v) {
        if (head[v] == 0) {
            ++count;
        }
    }
    return count;
}

}  // namespace

double tree_score(const ArcMatrix& scores, const std::vector<std::size_t>& heads) {
    double total = 0.0;
    for (std::size_t i = 0; i < heads.size(); ++i) {
        total += scores[heads[i]][i + 1];
    }
    return total;
}

bool is_single_root_arborescence(const std::vector<std::size_t>& heads) {
    std::size_t n = heads.size();
    std::size_t roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (heads[i] > n || heads[i] == i + 1) {
            return false;
        }
        if (heads[i] == 0) {
            ++roots;
        }
    }
    if (roots != 1) {
        return false;
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t v = i + 1;
        std::size_t hops = 0;
        while (v != 0) {
            v = heads[v - 1];
            if (++hops > n) {
                return false;  // cycle
            }
        }
    }
    return true;
}

std::vector<std::size_t> decode_tree(const ArcMatrix& scores) {
    std::size_t m = scores.size();
    if (m < 2) {
        throw DataError("decode_tree: empty sentence");
    }
    for (const auto& row : scores) {
        if (row.size() != m) {
            throw InternalError("decode_tree: score matrix is not square");
        }
    }

    std::vector<std::size_t> head = cle(scores);
    std::vector<std::size_t> result(head.begin() + 1, head.end());
    if (root_children(head) != 1) {
        // Constrained re-decode: force each feasible root child in turn.
        bool found = false;
        double best_total = kNegInf;
        std::vector<std::size_t> best;
        for (std::size_t c = 1; c < m; ++c) {
            if (std::isinf(scores[0][c])) {
                continue;
            }
            ArcMatrix constrained = scores;
            for (std::size_t v = 1; v < m; ++v) {
                if (v != c) {
                    constrained[0][v] = kNegInf;
                }
            }
            std::vector<std::size_t> cand_head;
            try {
                cand_head = cle(constrained);
            } catch (const DataError&) {
                continue;  // no arborescence under this constraint
            }
            std::vector<std::size_t> cand(cand_head.begin() + 1, cand_head.end());
            double total = tree_score(scores, cand);
            if (!found || total > best_total) {
                found = true;
                best_total = total;
                best = std::move(cand);
            }
        }
        if (!found) {
            throw DataError("decode_tree: no single-root arborescence exists");
        }
        result = std::move(best);
    }
    if (!is_single_root_arborescence(result)) {
        throw InternalError("decode_tree: produced an invalid arborescence");
    }
    return result;
}

}  // namespace pixeltext
