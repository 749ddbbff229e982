#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sage/errors.hpp"
#include "sage/prob.hpp"

namespace sage {

// Draft tree of speculative candidates. Nodes are stored in insertion order;
// parent NO_PARENT means the node hangs off the committed context (level 1).
// Insertion order doubles as the deterministic traversal order everywhere
// (builder, verifier, masks), so two trees built the same way compare equal
// node-by-node.
class DraftTree {
public:
    static constexpr int NO_PARENT = -1;

    struct Node {
        TokenId token;
        int parent;
        int level;          // 1 for root children
        double node_prob;   // draft prob of token at its position
        double path_prob;   // product of node probs along the path
    };

    explicit DraftTree(int capacity) : capacity_(capacity) {
        if (capacity < 0) {
            throw std::invalid_argument("DraftTree: negative capacity");
        }
    }

    int add_child(int parent, TokenId token, double prob) {
        if (static_cast<int>(nodes_.size()) >= capacity_) {
            throw std::length_error("DraftTree: node budget exhausted");
        }
        if (parent != NO_PARENT && (parent < 0 || parent >= static_cast<int>(nodes_.size()))) {
            throw std::out_of_range("DraftTree: invalid parent index");
        }
        if (!(prob >= 0.0) || prob > 1.0) {
            throw std::invalid_argument("DraftTree: node probability outside [0, 1]");
        }
        Node n;
        n.token = token;
        n.parent = parent;
        if (parent == NO_PARENT) {
            n.level = 1;
            n.path_prob = prob;
        } else {
            n.level = nodes_[parent].level + 1;
            n.path_prob = nodes_[parent].path_prob * prob;
        }
        n.node_prob = prob;
        int idx = static_cast<int>(nodes_.size());
        nodes_.push_back(n);
        children_.emplace_back();
        if (parent == NO_PARENT) {
            roots_.push_back(idx);
        } else {
            children_[parent].push_back(idx);
        }
        return idx;
    }

    int size() const { return static_cast<int>(nodes_.size()); }
    bool empty() const { return nodes_.empty(); }
    bool full() const { return static_cast<int>(nodes_.size()) >= capacity_; }
    int capacity() const { return capacity_; }

    const Node& node(int i) const { return nodes_.at(i); }
    const std::vector<int>& children(int i) const { return children_.at(i); }
    const std::vector<int>& root_children() const { return roots_; }

    int max_level() const {
        int d = 0;
        for (const Node& n : nodes_) {
            if (n.level > d) d = n.level;
        }
        return d;
    }

    // node indices from a root child down to `i`, inclusive
    std::vector<int> path_to(int i) const {
        std::vector<int> path;
        for (int cur = i; cur != NO_PARENT; cur = nodes_.at(cur).parent) {
            path.push_back(cur);
        }
        std::reverse(path.begin(), path.end());
        return path;
    }

private:
    int capacity_;
    std::vector<Node> nodes_;
    std::vector<std::vector<int>> children_;
    std::vector<int> roots_;
};

// mask[i][j] = 1 iff node j is node i or one of its ancestors; this is the
// causal visibility pattern a batched verification pass would use
inline std::vector<std::vector<std::uint8_t>> ancestor_mask(const DraftTree& tree) {
    int n = tree.size();
    std::vector<std::vector<std::uint8_t>> mask(n, std::vector<std::uint8_t>(n, 0));
    for (int i = 0; i < n; ++i) {
        int cur = i;
        while (cur != DraftTree::NO_PARENT) {
            mask[i][cur] = 1;
            cur = tree.node(cur).parent;
        }
    }
    return mask;
}

// all root-to-leaf paths (as node index lists), depth-first in insertion
// order of children; the verifier's tie-break relies on this order
inline std::vector<std::vector<int>> enumerate_root_paths(const DraftTree& tree) {
    std::vector<std::vector<int>> paths;
    std::vector<int> stack;
    auto dfs = [&](auto&& self, int idx) -> void {
        stack.push_back(idx);
        if (tree.children(idx).empty()) {
            paths.push_back(stack);
        } else {
            for (int c : tree.children(idx)) {
                self(self, c);
            }
        }
        stack.pop_back();
    };
    for (int r : tree.root_children()) {
        dfs(dfs, r);
    }
    return paths;
}

// Static tree shape: a list of (parent, rank) slots to be filled with the
// rank-th most probable continuation at each position. parent -1 is the
// committed context. Used for the fixed-shape decode mode and as the seed
// shape for the adaptive engine's first round.
struct TreeTemplate {
    struct Slot {
        int parent;
        int rank;
    };
    std::vector<Slot> slots;

    void validate() const {
        for (std::size_t i = 0; i < slots.size(); ++i) {
            const Slot& s = slots[i];
            if (s.parent < -1 || s.parent >= static_cast<int>(i)) {
                throw ConfigError("tree template: slot " + std::to_string(i) +
                                  " has invalid parent (must reference an earlier slot or -1)");
            }
            if (s.rank < 0) {
                throw ConfigError("tree template: slot " + std::to_string(i) + " has negative rank");
            }
        }
    }

    int size() const { return static_cast<int>(slots.size()); }

    int depth() const {
        std::vector<int> level(slots.size(), 0);
        int d = 0;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            level[i] = slots[i].parent == -1 ? 1 : level[slots[i].parent] + 1;
            if (level[i] > d) d = level[i];
        }
        return d;
    }

    int level_one_count() const {
        int c = 0;
        for (const Slot& s : slots) {
            if (s.parent == -1) ++c;
        }
        return c;
    }

    bool operator==(const TreeTemplate& other) const {
        if (slots.size() != other.slots.size()) return false;
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (slots[i].parent != other.slots[i].parent || slots[i].rank != other.slots[i].rank) {
                return false;
            }
        }
        return true;
    }
};

inline nlohmann::json template_to_json(const TreeTemplate& t) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : t.slots) {
        arr.push_back({{"parent", s.parent}, {"rank", s.rank}});
    }
    return arr;
}

inline TreeTemplate template_from_json(const nlohmann::json& j) {
    if (!j.is_array()) {
        throw ConfigError("tree template: expected a JSON array of {parent, rank} objects");
    }
    TreeTemplate t;
    for (const auto& e : j) {
        if (!e.is_object() || !e.contains("parent") || !e.contains("rank")) {
            throw ConfigError("tree template: each entry needs integer fields 'parent' and 'rank'");
        }
        t.slots.push_back({e.at("parent").get<int>(), e.at("rank").get<int>()});
    }
    t.validate();
    return t;
}

inline TreeTemplate load_template_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("tree template: cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("tree template: parse error in " + path + ": " + e.what());
    }
    return template_from_json(j);
}

// Seed shape for the first adaptive round: 18 slots, depth 6, fan-out
// tapering 4/5/4/3/1/1. Mirrored on disk at data/init_tree.json.
inline const TreeTemplate& default_initial_template() {
    static const TreeTemplate t = [] {
        TreeTemplate tt;
        tt.slots = {
            {-1, 0}, {-1, 1}, {-1, 2}, {-1, 3},
            {0, 0},  {0, 1},  {0, 2},  {1, 0},  {2, 0},
            {4, 0},  {4, 1},  {5, 0},  {7, 0},
            {9, 0},  {9, 1},  {11, 0},
            {13, 0},
            {16, 0},
        };
        tt.validate();
        return tt;
    }();
    return t;
}

} // namespace sage
