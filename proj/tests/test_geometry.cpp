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

#include <gtest/gtest.h>

#include <string>

#include "geoqa/geometry.hpp"
#include "support.hpp"

namespace {

using namespace geoqa;
using geom::Location;
using geom::Point;
using geom::Polygon;

Polygon square(double x0, double y0, double x1, double y1) {
  return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}}};
}

TEST(Wkt, ParsesFullPrecisionVertices) {
  const auto p = geom::parse_wkt_polygon(
      "POLYGON ((25.124978607257269 35.335507039952923,25.125731428234683 35.33657416799705,"
      "25.124245480098633 35.336224035643134,25.124978607257269 35.335507039952923))");
  ASSERT_EQ(p.ring.size(), 4u);
  EXPECT_EQ(p.ring[0].x, 25.124978607257269);
  EXPECT_EQ(p.ring[0].y, 35.335507039952923);
  EXPECT_EQ(geom::parse_wkt_polygon(geom::to_wkt(p)), p);
}

TEST(Wkt, RejectsMalformedRings) {
  EXPECT_THROW(geom::parse_wkt_polygon("POLYGON ((0 0, 1 0, 1 1, 0 1))"), geom::WktError);
  try {
    geom::parse_wkt_polygon("POLYGON ((0 0, 1 0, 1 1, 0 1))");
  } catch (const geom::WktError& e) {
    EXPECT_NE(std::string(e.what()).find("unclosed ring"), std::string::npos);
  }
  EXPECT_THROW(geom::parse_wkt_polygon("POLYGON ((0 0, 1 0, 0 0))"), geom::WktError);
  EXPECT_THROW(geom::parse_wkt_polygon("POLYGON ((0 0, 2 2, 2 0, 0 2, 0 0))"), geom::WktError);
  EXPECT_THROW(geom::parse_wkt_polygon("POLYGON ((0 0, 1 0, 2 0, 0 0))"), geom::WktError);
  EXPECT_THROW(geom::parse_wkt_polygon("POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 2 1, 2 2, 1 1))"),
               geom::WktError);
  EXPECT_THROW(geom::parse_wkt_polygon("MULTIPOLYGON (((0 0, 1 0, 1 1, 0 0)))"), geom::WktError);
  EXPECT_THROW(geom::parse_wkt_polygon("POINT (1 2)"), geom::WktError);
  EXPECT_THROW(geom::parse_wkt_polygon("POLYGON ((0 0, 1 0, 1 1, 0 0)) extra"), geom::WktError);
}

TEST(Wkt, CaseInsensitiveTag) {
  EXPECT_NO_THROW(geom::parse_wkt_polygon("polygon((0 0,1 0,1 1,0 0))"));
}

TEST(Locate, ClassifiesAgainstSquare) {
  const auto s = square(0, 0, 2, 2);
  EXPECT_EQ(geom::locate({1, 1}, s), Location::Interior);
  EXPECT_EQ(geom::locate({2, 1}, s), Location::Boundary);
  EXPECT_EQ(geom::locate({0, 0}, s), Location::Boundary);
  EXPECT_EQ(geom::locate({3, 1}, s), Location::Exterior);
  EXPECT_EQ(geom::locate({1, 2 + 1e-12}, s), Location::Boundary);
}

TEST(Topology, EdgeSharingSquaresTouch) {
  EXPECT_TRUE(geom::sf_touches(square(0, 0, 1, 1), square(1, 0, 2, 1)));
  EXPECT_TRUE(geom::sf_touches(square(0, 0, 1, 1), square(1, 0.5, 2, 3)));
}

TEST(Topology, CornerContactTouches) {
  EXPECT_TRUE(geom::sf_touches(square(0, 0, 1, 1), square(1, 1, 2, 2)));
}

TEST(Topology, OverlapAndSeparationDoNotTouch) {
  EXPECT_FALSE(geom::sf_touches(square(0, 0, 2, 2), square(1, 1, 3, 3)));
  EXPECT_FALSE(geom::sf_touches(square(0, 0, 1, 1), square(1.5, 0, 2, 1)));
  EXPECT_FALSE(geom::sf_touches(square(0, 0, 2, 2), square(0, 0, 2, 2)));
}

TEST(Topology, ContainsCases) {
  const auto outer = square(0, 0, 4, 4);
  EXPECT_TRUE(geom::sf_contains(outer, square(1, 1, 2, 2)));
  EXPECT_TRUE(geom::sf_contains(outer, outer));
  EXPECT_TRUE(geom::sf_contains(outer, square(0, 1, 2, 2)));  // shares part of an edge
  EXPECT_FALSE(geom::sf_contains(square(1, 1, 2, 2), outer));
  EXPECT_FALSE(geom::sf_contains(outer, square(3, 3, 5, 5)));
  EXPECT_FALSE(geom::sf_contains(outer, square(4, 0, 5, 1)));
}

TEST(Topology, ConcaveHostDoesNotContainBridge) {
  // U shape; the square spans the notch, so its middle lies outside.
  const Polygon u{{{0, 0}, {3, 0}, {3, 3}, {2, 3}, {2, 1}, {1, 1}, {1, 3}, {0, 3}, {0, 0}}};
  EXPECT_FALSE(geom::sf_contains(u, square(0.5, 1.5, 2.5, 2.5)));
  EXPECT_TRUE(geom::sf_contains(u, square(0, 0, 3, 1)));
  EXPECT_TRUE(geom::sf_touches(u, square(1, 1, 2, 3)));
}

TEST(Topology, InnerSquareSharingEdgeAgreesWithRaster) {
  // 2x2 host, one-cell guest in its lower-left corner, and one beside it.
  const oracle::Cells host{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const oracle::Cells inner{{0, 0}};
  const oracle::Cells beside{{2, 0}};
  const oracle::Affine id;
  const auto ph = oracle::to_polygon(host, id);
  const auto r_inner = oracle::raster_de9im(host, inner);
  const auto r_beside = oracle::raster_de9im(host, beside);
  EXPECT_TRUE(r_inner.contains());
  EXPECT_FALSE(r_inner.touches());
  EXPECT_TRUE(r_beside.touches());
  EXPECT_FALSE(r_beside.contains());
  EXPECT_EQ(geom::sf_contains(ph, oracle::to_polygon(inner, id)), r_inner.contains());
  EXPECT_EQ(geom::sf_touches(ph, oracle::to_polygon(inner, id)), r_inner.touches());
  EXPECT_EQ(geom::sf_contains(ph, oracle::to_polygon(beside, id)), r_beside.contains());
  EXPECT_EQ(geom::sf_touches(ph, oracle::to_polygon(beside, id)), r_beside.touches());
}

TEST(Topology, RandomPairsAgreeWithRaster) {
  Rng rng(2024);
  for (int k = 0; k < 60; ++k) {
    const auto c = oracle::random_polygon_case(rng);
    ASSERT_NO_THROW(geom::validate(c.pa));
    ASSERT_NO_THROW(geom::validate(c.pb));
    EXPECT_EQ(geom::sf_touches(c.pa, c.pb), c.oracle.touches()) << "case " << k;
    EXPECT_EQ(geom::sf_contains(c.pa, c.pb), c.oracle.contains()) << "case " << k;
  }
}

TEST(Properties, TouchesIsSymmetricAndExcludesContains) {
  Rng rng(99);
  for (int k = 0; k < 60; ++k) {
    const auto c = oracle::random_polygon_case(rng);
    const bool t = geom::sf_touches(c.pa, c.pb);
    EXPECT_EQ(t, geom::sf_touches(c.pb, c.pa));
    if (t) {
      EXPECT_FALSE(geom::sf_contains(c.pa, c.pb));
      EXPECT_FALSE(geom::sf_contains(c.pb, c.pa));
    }
  }
}

TEST(Properties, EveryPolygonContainsItself) {
  Rng rng(5);
  for (int k = 0; k < 30; ++k) {
    const auto c = oracle::random_polygon_case(rng);
    EXPECT_TRUE(geom::sf_contains(c.pa, c.pa));
    EXPECT_FALSE(geom::sf_touches(c.pa, c.pa));
  }
}

TEST(Properties, ReversedRingOrientationChangesNothing) {
  Rng rng(11);
  for (int k = 0; k < 30; ++k) {
    auto c = oracle::random_polygon_case(rng);
    Polygon rev = c.pb;
    std::reverse(rev.ring.begin(), rev.ring.end());
    EXPECT_EQ(geom::sf_touches(c.pa, rev), geom::sf_touches(c.pa, c.pb));
    EXPECT_EQ(geom::sf_contains(c.pa, rev), geom::sf_contains(c.pa, c.pb));
  }
}

}  // namespace
