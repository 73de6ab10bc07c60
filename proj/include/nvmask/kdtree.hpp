#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace nvmask {

/// Static kd-tree over a fixed point set. Exact nearest-neighbour queries
/// only; the tree is read-only after construction and safe to query from
/// several threads.
template <std::size_t Dim>
class KdTree {
public:
    using Point = std::array<double, Dim>;

    explicit KdTree(std::vector<Point> points) : points_(std::move(points)), order_(points_.size())
    {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        if (!points_.empty()) {
            nodes_.reserve(4 * points_.size() / leaf_size + 2);
            build(0, points_.size());
        }
    }

    std::size_t size() const { return points_.size(); }
    const Point& point(std::size_t i) const { return points_[i]; }

    struct Hit {
        std::size_t index = std::numeric_limits<std::size_t>::max();
        double dist2 = std::numeric_limits<double>::infinity();
    };

    /// Closest point to q, skipping index `exclude` (pass size() to skip none).
    Hit nearest(const Point& q, std::size_t exclude) const
    {
        Hit best;
        if (!nodes_.empty()) search(0, q, exclude, best);
        return best;
    }

    static double distance2(const Point& a, const Point& b)
    {
        double s = 0.0;
        for (std::size_t d = 0; d < Dim; ++d) {
            const double t = a[d] - b[d];
            s += t * t;
        }
        return s;
    }

private:
    static constexpr std::size_t leaf_size = 8;

    struct Node {
        std::size_t begin, end;  // range in order_
        std::size_t left, right; // child nodes; 0 marks a leaf
        std::size_t axis;
        double split;
    };

    std::size_t build(std::size_t begin, std::size_t end)
    {
        const std::size_t id = nodes_.size();
        nodes_.push_back({begin, end, 0, 0, 0, 0.0});
        if (end - begin <= leaf_size) return id;

        // split along the widest extent
        Point lo, hi;
        lo.fill(std::numeric_limits<double>::infinity());
        hi.fill(-std::numeric_limits<double>::infinity());
        for (std::size_t i = begin; i < end; ++i) {
            const auto& p = points_[order_[i]];
            for (std::size_t d = 0; d < Dim; ++d) {
                lo[d] = std::min(lo[d], p[d]);
                hi[d] = std::max(hi[d], p[d]);
            }
        }
        std::size_t axis = 0;
        for (std::size_t d = 1; d < Dim; ++d)
            if (hi[d] - lo[d] > hi[axis] - lo[axis]) axis = d;

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
        const double split = points_[order_[mid]][axis];

        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        return id;
    }

    void search(std::size_t id, const Point& q, std::size_t exclude, Hit& best) const
    {
        const Node& node = nodes_[id];
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t k = order_[i];
                if (k == exclude) continue;
                const double d2 = distance2(points_[k], q);
                if (d2 < best.dist2 || (d2 == best.dist2 && k < best.index)) best = {k, d2};
            }
            return;
        }
        const double diff = q[node.axis] - node.split;
        const std::size_t first = diff < 0.0 ? node.left : node.right;
        const std::size_t second = diff < 0.0 ? node.right : node.left;
        search(first, q, exclude, best);
        if (diff * diff <= best.dist2) search(second, q, exclude, best);
    }

    std::vector<Point> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace nvmask
