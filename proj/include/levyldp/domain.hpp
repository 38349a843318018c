#pragma once

// Bounded domains around the origin: intervals (d = 1), balls and convex
// polygons (d = 2), with boundary nodes and outward normals.

#include "levyldp/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace levyldp {

struct BoundaryNode {
  Vec point;
  Vec normal;  // outward unit normal
};

class Domain {
 public:
  enum class Kind { interval, ball, polygon };

  static Domain interval(double lo, double hi) {
    require(lo < 0.0 && hi > 0.0, "domain: interval must contain 0 in its interior");
    Domain D;
    D.kind_ = Kind::interval;
    D.dim_ = 1;
    D.lo_ = lo;
    D.hi_ = hi;
    return D;
  }

  static Domain ball(int d, double radius) {
    require(d >= 1 && d <= 3 && radius > 0.0, "domain: ball needs d in 1..3 and radius > 0");
    if (d == 1) return interval(-radius, radius);
    Domain D;
    D.kind_ = Kind::ball;
    D.dim_ = d;
    D.radius_ = radius;
    return D;
  }

  /// Convex polygon given by counter-clockwise vertices; must contain 0.
  static Domain polygon(std::vector<Vec> vertices) {
    require(vertices.size() >= 3, "domain: polygon needs at least three vertices");
    Domain D;
    D.kind_ = Kind::polygon;
    D.dim_ = 2;
    D.vertices_ = std::move(vertices);
    for (std::size_t i = 0; i < D.vertices_.size(); ++i) {
      const Vec& a = D.vertices_[i];
      const Vec& b = D.vertices_[(i + 1) % D.vertices_.size()];
      require(a.size() == 2, "domain: polygon vertices must be 2-d");
      Vec e = b - a;
      Vec n(2);
      n << e[1], -e[0];
      double len = n.norm();
      require(len > 0.0, "domain: repeated polygon vertex");
      n /= len;
      double off = n.dot(a);  // <n, x> <= off inside
      require(off > 0.0, "domain: polygon must contain 0 and be listed counter-clockwise");
      D.normals_.push_back(n);
      D.offsets_.push_back(off);
    }
    return D;
  }

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  bool contains(const Vec& x) const {
    switch (kind_) {
      case Kind::interval: return x[0] > lo_ && x[0] < hi_;
      case Kind::ball: return x.norm() < radius_;
      case Kind::polygon:
        for (std::size_t i = 0; i < normals_.size(); ++i)
          if (!(normals_[i].dot(x) < offsets_[i])) return false;
        return true;
    }
    return false;
  }

  /// Distance from the origin to the boundary.
  double inradius() const {
    switch (kind_) {
      case Kind::interval: return std::min(-lo_, hi_);
      case Kind::ball: return radius_;
      case Kind::polygon: return *std::min_element(offsets_.begin(), offsets_.end());
    }
    return 0.0;
  }

  double diameter() const {
    switch (kind_) {
      case Kind::interval: return hi_ - lo_;
      case Kind::ball: return 2.0 * radius_;
      case Kind::polygon: {
        double m = 0.0;
        for (const auto& a : vertices_)
          for (const auto& b : vertices_) m = std::max(m, (a - b).norm());
        return m;
      }
    }
    return 0.0;
  }

  /// Boundary discretization. Intervals always give their two endpoints
  /// (lower first); balls and polygons give about `n` nodes.
  std::vector<BoundaryNode> boundary_nodes(int n = 32) const {
    std::vector<BoundaryNode> out;
    switch (kind_) {
      case Kind::interval:
        out.push_back({scalar_vec(lo_), scalar_vec(-1.0)});
        out.push_back({scalar_vec(hi_), scalar_vec(1.0)});
        break;
      case Kind::ball:
        if (dim_ == 2) {
          for (int i = 0; i < n; ++i) {
            double th = 2.0 * std::numbers::pi * i / n;
            Vec u(2);
            u << std::cos(th), std::sin(th);
            out.push_back({radius_ * u, u});
          }
        } else {
          // Fibonacci sphere
          const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
          for (int i = 0; i < n; ++i) {
            double z = 1.0 - 2.0 * (i + 0.5) / n;
            double r = std::sqrt(1.0 - z * z);
            Vec u(3);
            u << r * std::cos(golden * i), r * std::sin(golden * i), z;
            out.push_back({radius_ * u, u});
          }
        }
        break;
      case Kind::polygon: {
        double perim = 0.0;
        for (std::size_t i = 0; i < vertices_.size(); ++i)
          perim += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
        for (std::size_t i = 0; i < vertices_.size(); ++i) {
          const Vec& a = vertices_[i];
          const Vec& b = vertices_[(i + 1) % vertices_.size()];
          int m = std::max(1, static_cast<int>(std::lround(n * (b - a).norm() / perim)));
          for (int j = 0; j < m; ++j) {
            double t = (j + 0.5) / m;
            out.push_back({Vec((1.0 - t) * a + t * b), normals_[i]});
          }
        }
        break;
      }
    }
    return out;
  }

  /// Index of the boundary node nearest to x (smallest index on ties).
  static std::size_t nearest_node(const std::vector<BoundaryNode>& nodes, const Vec& x) {
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      double d = (nodes[i].point - x).norm();
      if (d < bd) {
        bd = d;
        best = i;
      }
    }
    return best;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::interval: return "interval(" + std::to_string(lo_) + ", " + std::to_string(hi_) + ")";
      case Kind::ball: return "ball(d=" + std::to_string(dim_) + ", r=" + std::to_string(radius_) + ")";
      case Kind::polygon: return "polygon(" + std::to_string(vertices_.size()) + " vertices)";
    }
    return "";
  }

 private:
  Kind kind_ = Kind::interval;
  int dim_ = 1;
  double lo_ = -1.0, hi_ = 1.0, radius_ = 1.0;
  std::vector<Vec> vertices_;
  std::vector<Vec> normals_;
  std::vector<double> offsets_;
};

}  // namespace levyldp
