#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "segsys/cluster_feature.hpp"

namespace segsys::cftree {

using ClusterId = std::uint64_t;

// Node-size limits. Defaults follow the classic illustration (B = 6, L = 3).
struct TreeShape {
    std::size_t branch_factor = 6;  // max entries in an internal node
    std::size_t leaf_capacity = 3;  // max entries in a leaf node
};

enum class InsertKind { absorbed, new_subcluster, split_occurred };

struct InsertOutcome {
    InsertKind kind;
    ClusterId leaf_cluster_id;
    // Distance from the point to the nearest leaf subcluster before the
    // point was inserted. Zero when the tree was empty (see first_point).
    double distance;
    bool first_point;
};

struct NearestSubcluster {
    ClusterId id;
    double distance;
};

struct LeafCluster {
    ClusterId id;
    ClusterFeature cf;
};

struct AuditReport {
    bool branch_bound = true;
    bool balanced = true;
    bool internal_consistent = true;
    bool radius_bound = true;
    std::vector<std::string> violations;

    bool ok() const { return branch_bound && balanced && internal_consistent && radius_bound; }
};

// Memory-resident, height-balanced CF-tree.
//
// A point descends from the root into the nearest entry at each level and is
// absorbed by the nearest leaf subcluster when the absorbed radius stays
// within the threshold; otherwise it starts a new subcluster. Overflowing
// nodes split around their two farthest entries and splits propagate up to
// the root.
//
// Ties between equally near leaf subclusters go to the lowest cluster id
// (creation order); ties between internal entries go to the first entry.
//
// Not internally synchronized; see SharedCFTree.
class CFTree {
public:
    CFTree(std::size_t dimension, double threshold, TreeShape shape = {});
    ~CFTree();

    CFTree(const CFTree& other);
    CFTree& operator=(const CFTree& other);
    CFTree(CFTree&&) noexcept;
    CFTree& operator=(CFTree&&) noexcept;

    InsertOutcome insert(std::span<const double> x);

    // Same descent as insert() without modifying the tree.
    std::optional<NearestSubcluster> nearest(std::span<const double> x) const;

    // All leaf subclusters ordered by cluster id.
    std::vector<LeafCluster> leaf_clusters() const;

    AuditReport audit() const;

    std::size_t dimension() const noexcept { return dimension_; }
    double threshold() const noexcept { return threshold_; }
    const TreeShape& shape() const noexcept { return shape_; }
    std::size_t point_count() const noexcept { return points_; }
    std::size_t height() const;
    bool empty() const noexcept { return points_ == 0; }

private:
    struct Node;
    struct Entry;
    struct SplitResult;

    std::optional<SplitResult> insert_into(Node& node, std::span<const double> x, InsertOutcome& out);
    SplitResult split(Node& node) const;
    std::size_t capacity_of(const Node& node) const;

    std::size_t dimension_;
    double threshold_;
    TreeShape shape_;
    std::unique_ptr<Node> root_;
    ClusterId next_id_ = 0;
    std::size_t points_ = 0;
};

// Single-writer / multi-reader wrapper. Readers work on a consistent view of
// the tree between insertions.
class SharedCFTree {
public:
    explicit SharedCFTree(CFTree tree) : tree_(std::move(tree)) {}

    InsertOutcome insert(std::span<const double> x) {
        std::unique_lock lock(mutex_);
        return tree_.insert(x);
    }

    std::optional<NearestSubcluster> nearest(std::span<const double> x) const {
        std::shared_lock lock(mutex_);
        return tree_.nearest(x);
    }

    std::vector<LeafCluster> leaf_clusters() const {
        std::shared_lock lock(mutex_);
        return tree_.leaf_clusters();
    }

    CFTree snapshot() const {
        std::shared_lock lock(mutex_);
        return tree_;
    }

    double threshold() const { return tree_.threshold(); }

private:
    mutable std::shared_mutex mutex_;
    CFTree tree_;
};

}  // namespace segsys::cftree
