#include "segsys/cftree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "segsys/errors.hpp"

namespace segsys::cftree {

struct CFTree::Entry {
    ClusterFeature cf;
    std::unique_ptr<Node> child;  // null in leaves
    ClusterId id = 0;             // meaningful in leaves only
};

struct CFTree::Node {
    bool is_leaf = true;
    std::vector<Entry> entries;

    std::unique_ptr<Node> clone() const {
        auto copy = std::make_unique<Node>();
        copy->is_leaf = is_leaf;
        copy->entries.reserve(entries.size());
        for (const Entry& e : entries) {
            copy->entries.push_back(Entry{e.cf, e.child ? e.child->clone() : nullptr, e.id});
        }
        return copy;
    }

    ClusterFeature summary() const {
        ClusterFeature total = entries.front().cf;
        for (std::size_t i = 1; i < entries.size(); ++i) total.absorb(entries[i].cf);
        return total;
    }
};

struct CFTree::SplitResult {
    std::unique_ptr<Node> sibling;
};

namespace {

bool close_enough(double a, double b) {
    const double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= 1e-9 * scale;
}

}  // namespace

CFTree::CFTree(std::size_t dimension, double threshold, TreeShape shape)
    : dimension_(dimension), threshold_(threshold), shape_(shape), root_(std::make_unique<Node>()) {
    require(dimension_ >= 1, "tree dimension must be >= 1");
    require(std::isfinite(threshold_) && threshold_ >= 0.0, "threshold must be finite and >= 0");
    require(shape_.branch_factor >= 2, "branch factor must be >= 2");
    require(shape_.leaf_capacity >= 1, "leaf capacity must be >= 1");
}

CFTree::~CFTree() = default;
CFTree::CFTree(CFTree&&) noexcept = default;
CFTree& CFTree::operator=(CFTree&&) noexcept = default;

CFTree::CFTree(const CFTree& other)
    : dimension_(other.dimension_),
      threshold_(other.threshold_),
      shape_(other.shape_),
      root_(other.root_->clone()),
      next_id_(other.next_id_),
      points_(other.points_) {}

CFTree& CFTree::operator=(const CFTree& other) {
    if (this != &other) {
        CFTree copy(other);
        *this = std::move(copy);
    }
    return *this;
}

std::size_t CFTree::capacity_of(const Node& node) const {
    return node.is_leaf ? shape_.leaf_capacity : shape_.branch_factor;
}

InsertOutcome CFTree::insert(std::span<const double> x) {
    if (x.size() != dimension_) {
        contract_violation("dimension mismatch: tree has " + std::to_string(dimension_) + ", point has " +
                           std::to_string(x.size()));
    }
    InsertOutcome out{InsertKind::new_subcluster, 0, 0.0, false};
    if (points_ == 0) {
        root_->entries.push_back(Entry{ClusterFeature(x), nullptr, next_id_++});
        out.leaf_cluster_id = root_->entries.back().id;
        out.first_point = true;
        ++points_;
        return out;
    }

    if (auto split_root = insert_into(*root_, x, out)) {
        auto new_root = std::make_unique<Node>();
        new_root->is_leaf = false;
        ClusterFeature left = root_->summary();
        ClusterFeature right = split_root->sibling->summary();
        new_root->entries.push_back(Entry{std::move(left), std::move(root_), 0});
        new_root->entries.push_back(Entry{std::move(right), std::move(split_root->sibling), 0});
        root_ = std::move(new_root);
    }
    ++points_;
    return out;
}

std::optional<CFTree::SplitResult> CFTree::insert_into(Node& node, std::span<const double> x,
                                                       InsertOutcome& out) {
    if (node.is_leaf) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < node.entries.size(); ++i) {
            const double d = distance_point_to_cluster(x, node.entries[i].cf);
            if (d < best_d || (d == best_d && node.entries[i].id < node.entries[best].id)) {
                best = i;
                best_d = d;
            }
        }
        out.distance = best_d;

        ClusterFeature candidate = cf_add_point(node.entries[best].cf, x);
        if (cf_radius(candidate) <= threshold_) {
            node.entries[best].cf = std::move(candidate);
            out.kind = InsertKind::absorbed;
            out.leaf_cluster_id = node.entries[best].id;
            return std::nullopt;
        }
        node.entries.push_back(Entry{ClusterFeature(x), nullptr, next_id_++});
        out.kind = InsertKind::new_subcluster;
        out.leaf_cluster_id = node.entries.back().id;
        if (node.entries.size() > capacity_of(node)) {
            out.kind = InsertKind::split_occurred;
            return split(node);
        }
        return std::nullopt;
    }

    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
        const double d = distance_point_to_cluster(x, node.entries[i].cf);
        if (d < best_d) {
            best = i;
            best_d = d;
        }
    }

    auto child_split = insert_into(*node.entries[best].child, x, out);
    if (!child_split) {
        node.entries[best].cf.absorb(x);
        return std::nullopt;
    }

    node.entries[best].cf = node.entries[best].child->summary();
    ClusterFeature sibling_cf = child_split->sibling->summary();
    node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(best) + 1,
                        Entry{std::move(sibling_cf), std::move(child_split->sibling), 0});
    if (node.entries.size() > capacity_of(node)) return split(node);
    return std::nullopt;
}

CFTree::SplitResult CFTree::split(Node& node) const {
    std::vector<Entry> entries = std::move(node.entries);
    node.entries.clear();

    // Seeds: the farthest pair of entry centroids.
    std::size_t seed_a = 0;
    std::size_t seed_b = 1;
    double farthest = -1.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            const double d = distance_clusters(entries[i].cf, entries[j].cf);
            if (d > farthest) {
                farthest = d;
                seed_a = i;
                seed_b = j;
            }
        }
    }

    auto sibling = std::make_unique<Node>();
    sibling->is_leaf = node.is_leaf;
    const ClusterFeature cf_a = entries[seed_a].cf;
    const ClusterFeature cf_b = entries[seed_b].cf;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        bool to_a;
        if (i == seed_a) {
            to_a = true;
        } else if (i == seed_b) {
            to_a = false;
        } else {
            to_a = distance_clusters(entries[i].cf, cf_a) <= distance_clusters(entries[i].cf, cf_b);
        }
        (to_a ? node.entries : sibling->entries).push_back(std::move(entries[i]));
    }
    return SplitResult{std::move(sibling)};
}

std::optional<NearestSubcluster> CFTree::nearest(std::span<const double> x) const {
    if (x.size() != dimension_) contract_violation("dimension mismatch in nearest()");
    if (points_ == 0) return std::nullopt;
    const Node* node = root_.get();
    while (!node->is_leaf) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < node->entries.size(); ++i) {
            const double d = distance_point_to_cluster(x, node->entries[i].cf);
            if (d < best_d) {
                best = i;
                best_d = d;
            }
        }
        node = node->entries[best].child.get();
    }
    NearestSubcluster result{0, std::numeric_limits<double>::infinity()};
    for (const Entry& e : node->entries) {
        const double d = distance_point_to_cluster(x, e.cf);
        if (d < result.distance || (d == result.distance && e.id < result.id)) result = {e.id, d};
    }
    return result;
}

std::vector<LeafCluster> CFTree::leaf_clusters() const {
    std::vector<LeafCluster> out;
    std::vector<const Node*> stack{root_.get()};
    while (!stack.empty()) {
        const Node* node = stack.back();
        stack.pop_back();
        for (const Entry& e : node->entries) {
            if (node->is_leaf) {
                out.push_back(LeafCluster{e.id, e.cf});
            } else {
                stack.push_back(e.child.get());
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const LeafCluster& a, const LeafCluster& b) { return a.id < b.id; });
    return out;
}

std::size_t CFTree::height() const {
    std::size_t h = 1;
    for (const Node* node = root_.get(); !node->is_leaf; node = node->entries.front().child.get()) ++h;
    return h;
}

AuditReport CFTree::audit() const {
    AuditReport report;
    std::optional<std::size_t> leaf_depth;

    struct Frame {
        const Node* node;
        std::size_t depth;
    };
    std::vector<Frame> stack{{root_.get(), 1}};
    while (!stack.empty()) {
        const auto [node, depth] = stack.back();
        stack.pop_back();

        if (node->entries.size() > capacity_of(*node)) {
            report.branch_bound = false;
            report.violations.push_back("node at depth " + std::to_string(depth) + " holds " +
                                        std::to_string(node->entries.size()) + " entries");
        }
        if (node->entries.empty() && node != root_.get()) {
            report.branch_bound = false;
            report.violations.push_back("empty non-root node at depth " + std::to_string(depth));
        }

        if (node->is_leaf) {
            if (!leaf_depth) {
                leaf_depth = depth;
            } else if (*leaf_depth != depth) {
                report.balanced = false;
                report.violations.push_back("leaf at depth " + std::to_string(depth) + " vs " +
                                            std::to_string(*leaf_depth));
            }
            for (const Entry& e : node->entries) {
                if (e.cf.n() > 1 && cf_radius(e.cf) > threshold_ + 1e-9) {
                    report.radius_bound = false;
                    report.violations.push_back("subcluster " + std::to_string(e.id) + " radius " +
                                                std::to_string(cf_radius(e.cf)) + " exceeds threshold");
                }
            }
            continue;
        }

        for (const Entry& e : node->entries) {
            if (!e.child || e.child->entries.empty()) {
                report.internal_consistent = false;
                report.violations.push_back("internal entry without populated child");
                continue;
            }
            const ClusterFeature expected = e.child->summary();
            bool same = expected.n() == e.cf.n() && close_enough(expected.ss(), e.cf.ss());
            for (std::size_t i = 0; same && i < dimension_; ++i) {
                same = close_enough(expected.ls()[i], e.cf.ls()[i]);
            }
            if (!same) {
                report.internal_consistent = false;
                report.violations.push_back("internal entry at depth " + std::to_string(depth) +
                                            " disagrees with its child summary");
            }
            stack.push_back({e.child.get(), depth + 1});
        }
    }
    return report;
}

}  // namespace segsys::cftree
