// Copyright 2026 The GeoQA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "geoqa/error.hpp"
#include "geoqa/query_lexer.hpp"

namespace geoqa::geom {

/// Coincidence tolerance for planar predicates.
inline constexpr double kEpsilon = 1e-9;

struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }

class WktError : public Error {
 public:
  using Error::Error;
};

/// Single closed outer ring; ring.front() == ring.back().
struct Polygon {
  std::vector<Point> ring;

  std::size_t edge_count() const { return ring.empty() ? 0 : ring.size() - 1; }
  bool operator==(const Polygon&) const = default;
};

struct Segment {
  Point a;
  Point b;
};

inline double signed_area(const Polygon& p) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < p.ring.size(); ++i) s += cross(p.ring[i], p.ring[i + 1]);
  return 0.5 * s;
}

inline double point_segment_distance(Point p, Point a, Point b) {
  const Point d = b - a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * d));
}

// Crossing at a single interior point of both segments. Sides are judged by
// signed distance to the other line, so near-collinear pairs never qualify.
inline bool segments_cross_properly(Point p0, Point p1, Point q0, Point q1) {
  const double lp = norm(p1 - p0), lq = norm(q1 - q0);
  if (lp <= kEpsilon || lq <= kEpsilon) return false;
  const double d1 = cross(p1 - p0, q0 - p0) / lp;
  const double d2 = cross(p1 - p0, q1 - p0) / lp;
  const double d3 = cross(q1 - q0, p0 - q0) / lq;
  const double d4 = cross(q1 - q0, p1 - q0) / lq;
  const auto opposite = [](double u, double v) {
    return (u > kEpsilon && v < -kEpsilon) || (u < -kEpsilon && v > kEpsilon);
  };
  return opposite(d1, d2) && opposite(d3, d4);
}

inline double segment_distance(Point p0, Point p1, Point q0, Point q1) {
  if (segments_cross_properly(p0, p1, q0, q1)) return 0.0;
  return std::min({point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                   point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)});
}

/// Throws WktError when the ring is not closed, too short, degenerate or
/// self-intersecting.
inline void validate(const Polygon& p) {
  const auto& r = p.ring;
  if (r.size() < 4) throw WktError("polygon needs at least 4 ring vertices");
  if (!(r.front() == r.back())) throw WktError("unclosed ring");
  const std::size_t n = p.edge_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (norm(r[i + 1] - r[i]) <= kEpsilon) throw WktError("zero-length edge");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex only; the far endpoint must not fold back onto the other edge.
        const Point far_i = (j == i + 1) ? r[i] : r[i + 1];
        const Point far_j = (j == i + 1) ? r[j + 1] : r[j];
        if (point_segment_distance(far_i, r[j], r[j + 1]) <= kEpsilon ||
            point_segment_distance(far_j, r[i], r[i + 1]) <= kEpsilon) {
          throw WktError("ring folds back on itself");
        }
      } else if (segment_distance(r[i], r[i + 1], r[j], r[j + 1]) <= kEpsilon) {
        throw WktError("ring self-intersects");
      }
    }
  }
  if (std::abs(signed_area(p)) <= kEpsilon) throw WktError("zero-area polygon");
}

inline std::string format_coordinate(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string to_wkt(const Polygon& p) {
  std::string out = "POLYGON ((";
  for (std::size_t i = 0; i < p.ring.size(); ++i) {
    if (i) out += ", ";
    out += format_coordinate(p.ring[i].x);
    out += ' ';
    out += format_coordinate(p.ring[i].y);
  }
  out += "))";
  return out;
}

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline bool expect(std::string_view s, std::size_t& i, char c) {
  skip_ws(s, i);
  if (i < s.size() && s[i] == c) {
    ++i;
    return true;
  }
  return false;
}

inline double parse_number(std::string_view s, std::size_t& i) {
  skip_ws(s, i);
  double v = 0.0;
  const char* first = s.data() + i;
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{}) throw WktError("expected coordinate at character " + std::to_string(i));
  i = static_cast<std::size_t>(ptr - s.data());
  return v;
}

}  // namespace detail

/// Parses `POLYGON ((x y, x y, ...))` with a single outer ring.
inline Polygon parse_wkt_polygon(std::string_view text) {
  std::size_t i = 0;
  detail::skip_ws(text, i);
  std::size_t j = i;
  while (j < text.size() && is_ascii_alpha(text[j])) ++j;
  const std::string tag = ascii_lower(text.substr(i, j - i));
  if (tag == "multipolygon") throw WktError("MULTIPOLYGON is unsupported");
  if (tag != "polygon") throw WktError("expected POLYGON");
  i = j;
  if (!detail::expect(text, i, '(') || !detail::expect(text, i, '(')) {
    throw WktError("expected '((' after POLYGON");
  }
  Polygon poly;
  while (true) {
    const double x = detail::parse_number(text, i);
    const double y = detail::parse_number(text, i);
    poly.ring.push_back({x, y});
    if (detail::expect(text, i, ',')) continue;
    if (detail::expect(text, i, ')')) break;
    throw WktError("expected ',' or ')' at character " + std::to_string(i));
  }
  if (detail::expect(text, i, ',')) throw WktError("polygons with holes are unsupported");
  if (!detail::expect(text, i, ')')) throw WktError("expected ')' closing the polygon");
  detail::skip_ws(text, i);
  if (i != text.size()) throw WktError("trailing characters after polygon");
  if (poly.ring.size() >= 2 && !(poly.ring.front() == poly.ring.back())) {
    throw WktError("unclosed ring");
  }
  validate(poly);
  return poly;
}

enum class Location { Interior, Boundary, Exterior };

inline Location locate(Point p, const Polygon& poly) {
  const auto& r = poly.ring;
  bool inside = false;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const Point a = r[i];
    const Point b = r[i + 1];
    if (point_segment_distance(p, a, b) <= kEpsilon) return Location::Boundary;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside ? Location::Interior : Location::Exterior;
}

/// Edges of `a` cut at every point where the boundary of `b` meets them,
/// so each returned piece lies wholly in one of b's interior, boundary or
/// exterior.
inline std::vector<Segment> split_boundary(const Polygon& a, const Polygon& b) {
  std::vector<Segment> pieces;
  std::vector<double> ts;
  for (std::size_t i = 0; i < a.edge_count(); ++i) {
    const Point p0 = a.ring[i];
    const Point p1 = a.ring[i + 1];
    const Point d = p1 - p0;
    const double len2 = dot(d, d);
    const double len = std::sqrt(len2);
    ts.assign({0.0, 1.0});
    const auto add_t = [&](double t) {
      if (t * len > kEpsilon && (1.0 - t) * len > kEpsilon) ts.push_back(t);
    };
    for (std::size_t k = 0; k < b.edge_count(); ++k) {
      const Point q0 = b.ring[k];
      const Point q1 = b.ring[k + 1];
      for (const Point q : {q0, q1}) {
        if (point_segment_distance(q, p0, p1) <= kEpsilon) add_t(dot(q - p0, d) / len2);
      }
      if (segments_cross_properly(p0, p1, q0, q1)) {
        const Point e = q1 - q0;
        add_t(cross(q0 - p0, e) / cross(d, e));
      }
    }
    std::sort(ts.begin(), ts.end());
    double prev = ts.front();
    for (std::size_t k = 1; k < ts.size(); ++k) {
      if ((ts[k] - prev) * len <= kEpsilon) continue;
      pieces.push_back({p0 + prev * d, p0 + ts[k] * d});
      prev = ts[k];
    }
  }
  return pieces;
}

inline bool boundaries_intersect(const Polygon& a, const Polygon& b) {
  for (std::size_t i = 0; i < a.edge_count(); ++i) {
    for (std::size_t k = 0; k < b.edge_count(); ++k) {
      if (segment_distance(a.ring[i], a.ring[i + 1], b.ring[k], b.ring[k + 1]) <= kEpsilon) {
        return true;
      }
    }
  }
  return false;
}

namespace detail {

// True when some piece of a's boundary witnesses a point interior to both.
inline bool boundary_witnesses_overlap(const Polygon& a, const Polygon& b) {
  const double orientation = signed_area(a) > 0 ? 1.0 : -1.0;
  for (const Segment& s : split_boundary(a, b)) {
    const Point mid = 0.5 * (s.a + s.b);
    const Location loc = locate(mid, b);
    if (loc == Location::Interior) return true;
    if (loc == Location::Boundary) {
      const Point d = s.b - s.a;
      const double len = norm(d);
      const Point inward = (orientation / len) * Point{-d.y, d.x};
      const double offset = std::max(1e-6 * len, 100.0 * kEpsilon);
      const Point probe = mid + offset * inward;
      if (locate(probe, a) == Location::Interior && locate(probe, b) == Location::Interior) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace detail

inline bool interiors_intersect(const Polygon& a, const Polygon& b) {
  return detail::boundary_witnesses_overlap(a, b) || detail::boundary_witnesses_overlap(b, a);
}

/// Simple-features Touches: boundaries meet, interiors are disjoint.
inline bool sf_touches(const Polygon& a, const Polygon& b) {
  return boundaries_intersect(a, b) && !interiors_intersect(a, b);
}

/// Simple-features Contains: every point of b lies in the closure of a.
/// For positive-area b this already implies the interiors intersect.
inline bool sf_contains(const Polygon& a, const Polygon& b) {
  for (std::size_t i = 0; i + 1 < b.ring.size(); ++i) {
    if (locate(b.ring[i], a) == Location::Exterior) return false;
  }
  for (const Segment& s : split_boundary(b, a)) {
    if (locate(0.5 * (s.a + s.b), a) == Location::Exterior) return false;
  }
  return true;
}

}  // namespace geoqa::geom
