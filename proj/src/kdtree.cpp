#include "seqdetect/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "seqdetect/errors.hpp"

namespace seqdetect {

KdTree::KdTree(const PointSet& points, std::size_t leaf_size)
    : dim_(points.dim()), coords_(points.coords()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (points.empty()) throw ConfigError("KdTree: empty point set");
    nodes_.reserve(4 * points.size() / leaf_size_ + 1);
    build(0, points.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{begin, end, 0, 0.0, -1, -1});
    if (end - begin <= leaf_size_) return id;

    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t a = 0; a < dim_; ++a) {
        double lo = point(begin)[a];
        double hi = lo;
        for (std::size_t i = begin + 1; i < end; ++i) {
            lo = std::min(lo, point(i)[a]);
            hi = std::max(hi, point(i)[a]);
        }
        if (hi - lo > widest) {
            widest = hi - lo;
            axis = a;
        }
    }
    if (widest <= 0.0) return id;  // all coincident, keep as one leaf

    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const std::size_t mid = (end - begin) / 2;
    std::nth_element(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(mid), idx.end(),
                     [&](std::size_t a, std::size_t b) { return point(a)[axis] < point(b)[axis]; });

    std::vector<double> block;
    block.reserve((end - begin) * dim_);
    for (std::size_t i : idx) block.insert(block.end(), point(i).begin(), point(i).end());
    std::copy(block.begin(), block.end(), coords_.begin() + static_cast<std::ptrdiff_t>(begin * dim_));

    const std::size_t split_at = begin + mid;
    nodes_[static_cast<std::size_t>(id)].axis = axis;
    nodes_[static_cast<std::size_t>(id)].split = point(split_at)[axis];
    const int left = build(begin, split_at);
    const int right = build(split_at, end);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

void KdTree::search(int node_id, std::span<const double> query, std::size_t k,
                    std::vector<double>& heap) const {
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.left < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const double d2 = squared_distance(query, point(i));
            if (heap.size() < k) {
                heap.push_back(d2);
                std::push_heap(heap.begin(), heap.end());
            } else if (d2 < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = d2;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        return;
    }
    const double diff = query[node.axis] - node.split;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, query, k, heap);
    // Every point behind the plane is at least |diff| away along this axis.
    if (heap.size() < k || diff * diff <= heap.front()) search(far, query, k, heap);
}

double KdTree::kth_distance(std::span<const double> query, int k) const {
    if (k < 1 || static_cast<std::size_t>(k) > size()) {
        throw ConfigError("k = " + std::to_string(k) + " exceeds reference size " +
                          std::to_string(size()));
    }
    if (query.size() != dim_) {
        throw DataError("dimension mismatch: query has " + std::to_string(query.size()) +
                        " values, reference points have " + std::to_string(dim_));
    }
    std::vector<double> heap;
    heap.reserve(static_cast<std::size_t>(k));
    search(0, query, static_cast<std::size_t>(k), heap);
    return std::sqrt(heap.front());
}

}  // namespace seqdetect
