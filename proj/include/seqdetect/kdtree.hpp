#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "seqdetect/knn_model.hpp"

namespace seqdetect {

/// Exact k-nearest-neighbour index over a fixed point set.
///
/// Distances are computed with squared_distance() on the same coordinates as
/// the exhaustive scan, and pruning never discards a point whose distance
/// could tie the current k-th best, so kth_distance() is bit-identical to
/// knn_distance().
class KdTree {
public:
    explicit KdTree(const PointSet& points, std::size_t leaf_size = 8);

    std::size_t size() const noexcept { return coords_.size() / dim_; }
    std::size_t dim() const noexcept { return dim_; }

    double kth_distance(std::span<const double> query, int k) const;

private:
    struct Node {
        std::size_t begin = 0;
        std::size_t end = 0;
        std::size_t axis = 0;
        double split = 0.0;
        int left = -1;
        int right = -1;
    };

    std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
    int build(std::size_t begin, std::size_t end);
    void search(int node, std::span<const double> query, std::size_t k,
                std::vector<double>& heap) const;

    std::size_t dim_;
    std::vector<double> coords_;  // reordered copy; every node owns a contiguous range
    std::vector<Node> nodes_;
    std::size_t leaf_size_;
};

}  // namespace seqdetect
