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

// Independent reference implementations shared by the unit and acceptance
// suites. Nothing here calls into the code under test except for plumbing
// (parameter access and the batch loss).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "geoqa/geometry.hpp"
#include "geoqa/nmt.hpp"
#include "geoqa/random.hpp"

namespace geoqa::oracle {

// ---------------------------------------------------------------------------
// Lattice raster DE-9IM.
//
// Shapes are polyominoes (unions of unit cells). On the unit lattice every
// open cell, open unit edge and vertex lies wholly in one of a shape's
// interior, boundary or exterior, so sampling the half-integer points
// (cell centres, edge midpoints, vertices) decides every DE-9IM entry
// exactly. The polygons handed to the library are the traced outlines
// pushed through a shared affine map, which preserves topology.

using Cell = std::pair<int, int>;  // (column, row), covers [c, c+1] x [r, r+1]
using Cells = std::set<Cell>;

enum class Raster { Interior, Boundary, Exterior };

// Location of the sample (i/2, j/2).
inline Raster raster_locate(const Cells& shape, int i, int j) {
  const auto in = [&](int c, int r) { return shape.count({c, r}) != 0; };
  const bool odd_i = (i & 1) != 0;
  const bool odd_j = (j & 1) != 0;
  const int ci = (i - (odd_i ? 1 : 0)) / 2;
  const int cj = (j - (odd_j ? 1 : 0)) / 2;
  int hits = 0, total = 0;
  if (odd_i && odd_j) {
    return in(ci, cj) ? Raster::Interior : Raster::Exterior;
  } else if (odd_i) {  // horizontal edge at y = cj
    total = 2;
    hits = int(in(ci, cj - 1)) + int(in(ci, cj));
  } else if (odd_j) {  // vertical edge at x = ci
    total = 2;
    hits = int(in(ci - 1, cj)) + int(in(ci, cj));
  } else {
    total = 4;
    hits = int(in(ci - 1, cj - 1)) + int(in(ci, cj - 1)) + int(in(ci - 1, cj)) + int(in(ci, cj));
  }
  if (hits == 0) return Raster::Exterior;
  if (hits == total) return Raster::Interior;
  return Raster::Boundary;
}

struct De9im {
  bool m[3][3] = {};  // [location in a][location in b]
  bool at(Raster a, Raster b) const { return m[int(a)][int(b)]; }

  bool touches() const {
    return !at(Raster::Interior, Raster::Interior) &&
           (at(Raster::Boundary, Raster::Boundary) || at(Raster::Interior, Raster::Boundary) ||
            at(Raster::Boundary, Raster::Interior));
  }
  bool contains() const {
    return at(Raster::Interior, Raster::Interior) && !at(Raster::Exterior, Raster::Interior) &&
           !at(Raster::Exterior, Raster::Boundary);
  }
};

inline De9im raster_de9im(const Cells& a, const Cells& b) {
  int lo = 0, hi = 0;
  for (const Cells* s : {&a, &b}) {
    for (auto [c, r] : *s) {
      lo = std::min({lo, c, r});
      hi = std::max({hi, c, r});
    }
  }
  De9im out;
  for (int i = 2 * lo - 2; i <= 2 * hi + 4; ++i) {
    for (int j = 2 * lo - 2; j <= 2 * hi + 4; ++j) {
      out.m[int(raster_locate(a, i, j))][int(raster_locate(b, i, j))] = true;
    }
  }
  return out;
}

// A polyomino is usable when it is connected, has no holes and no two cells
// meet only at a corner, so its outline is one simple ring.
inline bool simple_polyomino(const Cells& s) {
  if (s.empty()) return false;
  const auto in = [&](int c, int r) { return s.count({c, r}) != 0; };
  int lo = 1 << 30, hi = -(1 << 30);
  for (auto [c, r] : s) {
    lo = std::min({lo, c, r});
    hi = std::max({hi, c, r});
  }
  for (int x = lo; x <= hi + 1; ++x) {
    for (int y = lo; y <= hi + 1; ++y) {
      const bool p = in(x - 1, y - 1), q = in(x, y - 1), u = in(x - 1, y), v = in(x, y);
      if ((p && v && !q && !u) || (q && u && !p && !v)) return false;
    }
  }
  // connectivity of the shape
  std::set<Cell> seen{*s.begin()};
  std::vector<Cell> stack{*s.begin()};
  while (!stack.empty()) {
    auto [c, r] = stack.back();
    stack.pop_back();
    for (Cell n : {Cell{c + 1, r}, Cell{c - 1, r}, Cell{c, r + 1}, Cell{c, r - 1}}) {
      if (s.count(n) && seen.insert(n).second) stack.push_back(n);
    }
  }
  if (seen.size() != s.size()) return false;
  // every empty cell in the padded box must reach the outside
  std::set<Cell> outside{{lo - 1, lo - 1}};
  stack = {{lo - 1, lo - 1}};
  while (!stack.empty()) {
    auto [c, r] = stack.back();
    stack.pop_back();
    for (Cell n : {Cell{c + 1, r}, Cell{c - 1, r}, Cell{c, r + 1}, Cell{c, r - 1}}) {
      if (n.first < lo - 1 || n.first > hi + 1 || n.second < lo - 1 || n.second > hi + 1) continue;
      if (!s.count(n) && outside.insert(n).second) stack.push_back(n);
    }
  }
  const int side = hi - lo + 3;
  return outside.size() + s.size() == std::size_t(side) * std::size_t(side);
}

// Counter-clockwise outline with collinear vertices removed; closed ring.
inline std::vector<std::pair<int, int>> trace_outline(const Cells& s) {
  std::map<std::pair<int, int>, std::pair<int, int>> next;
  for (auto [c, r] : s) {
    if (!s.count({c, r - 1})) next[{c, r}] = {c + 1, r};
    if (!s.count({c + 1, r})) next[{c + 1, r}] = {c + 1, r + 1};
    if (!s.count({c, r + 1})) next[{c + 1, r + 1}] = {c, r + 1};
    if (!s.count({c - 1, r})) next[{c, r + 1}] = {c, r};
  }
  std::vector<std::pair<int, int>> loop;
  auto cur = next.begin()->first;
  do {
    loop.push_back(cur);
    cur = next.at(cur);
  } while (cur != loop.front());
  std::vector<std::pair<int, int>> ring;
  const std::size_t n = loop.size();
  for (std::size_t k = 0; k < n; ++k) {
    auto p = loop[(k + n - 1) % n], q = loop[k], r = loop[(k + 1) % n];
    const long cr = long(q.first - p.first) * (r.second - q.second) - long(q.second - p.second) * (r.first - q.first);
    if (cr != 0) ring.push_back(q);
  }
  ring.push_back(ring.front());
  return ring;
}

struct Affine {
  double a = 1, b = 0, c = 0, d = 1, tx = 0, ty = 0;
  geom::Point operator()(double x, double y) const { return {a * x + b * y + tx, c * x + d * y + ty}; }
};

inline Affine random_affine(Rng& rng) {
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double scale = rng.uniform(0.3, 3.0);
  const double shear = rng.uniform(-0.6, 0.6);
  const double flip = rng.below(2) ? -1.0 : 1.0;
  // rotation * shear * scale, optionally mirrored
  const double ct = std::cos(theta), st = std::sin(theta);
  Affine m;
  m.a = scale * ct * flip;
  m.b = scale * (ct * shear - st);
  m.c = scale * st * flip;
  m.d = scale * (st * shear + ct);
  m.tx = rng.uniform(-50.0, 50.0);
  m.ty = rng.uniform(-50.0, 50.0);
  return m;
}

inline geom::Polygon to_polygon(const Cells& s, const Affine& m) {
  geom::Polygon p;
  for (auto [x, y] : trace_outline(s)) p.ring.push_back(m(x, y));
  p.ring.back() = p.ring.front();
  return p;
}

// Grows a random polyomino of up to `size` cells from `seed` inside the
// [0, grid)^2 box, optionally restricted to (or kept out of) `mask`.
enum class Growth { Free, Inside, Outside };

inline Cells grow(Rng& rng, Cell seed, std::size_t size, int grid, const Cells* mask, Growth mode) {
  const auto allowed = [&](Cell c) {
    if (c.first < 0 || c.second < 0 || c.first >= grid || c.second >= grid) return false;
    if (mode == Growth::Inside) return mask->count(c) != 0;
    if (mode == Growth::Outside) return mask->count(c) == 0;
    return true;
  };
  Cells s{seed};
  for (int attempt = 0; attempt < 200 && s.size() < size; ++attempt) {
    std::vector<Cell> frontier;
    for (auto [c, r] : s) {
      for (Cell n : {Cell{c + 1, r}, Cell{c - 1, r}, Cell{c, r + 1}, Cell{c, r - 1}}) {
        if (!s.count(n) && allowed(n)) frontier.push_back(n);
      }
    }
    if (frontier.empty()) break;
    Cells trial = s;
    trial.insert(frontier[rng.below(frontier.size())]);
    if (simple_polyomino(trial)) s = std::move(trial);
  }
  return s;
}

struct PolygonCase {
  Cells a, b;
  geom::Polygon pa, pb;
  De9im oracle;
};

// Mixes free pairs with pairs grown inside or beside the first shape so
// that touches and contains both occur often.
inline PolygonCase random_polygon_case(Rng& rng, int grid = 7) {
  PolygonCase out;
  const auto random_cell = [&] { return Cell{int(rng.below(grid)), int(rng.below(grid))}; };
  out.a = grow(rng, random_cell(), 3 + rng.below(10), grid, nullptr, Growth::Free);
  const auto mode = rng.below(3);
  if (mode == 0) {
    out.b = grow(rng, random_cell(), 1 + rng.below(8), grid, nullptr, Growth::Free);
  } else if (mode == 1) {
    std::vector<Cell> cells(out.a.begin(), out.a.end());
    out.b = grow(rng, cells[rng.below(cells.size())], 1 + rng.below(out.a.size()), grid, &out.a, Growth::Inside);
  } else {
    std::vector<Cell> rim;
    for (int c = 0; c < grid; ++c) {
      for (int r = 0; r < grid; ++r) {
        if (out.a.count({c, r})) continue;
        const bool edge_touch =
            out.a.count({c + 1, r}) || out.a.count({c - 1, r}) || out.a.count({c, r + 1}) || out.a.count({c, r - 1});
        const bool corner_touch = out.a.count({c + 1, r + 1}) || out.a.count({c - 1, r - 1}) ||
                                  out.a.count({c - 1, r + 1}) || out.a.count({c + 1, r - 1});
        if (edge_touch || corner_touch) rim.push_back({c, r});
      }
    }
    const Cell start = rim.empty() ? random_cell() : rim[rng.below(rim.size())];
    out.b = grow(rng, start, 1 + rng.below(6), grid, &out.a, rim.empty() ? Growth::Free : Growth::Outside);
  }
  const Affine m = random_affine(rng);
  out.pa = to_polygon(out.a, m);
  out.pb = to_polygon(out.b, m);
  out.oracle = raster_de9im(out.a, out.b);
  return out;
}

// ---------------------------------------------------------------------------
// BLEU by direct counting over n-gram strings.

inline std::map<std::string, int> count_ngrams(const std::vector<std::string>& s, std::size_t n) {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) key += s[i + k] + '\x1f';
    ++out[key];
  }
  return out;
}

inline double oracle_bleu(const std::vector<std::vector<std::string>>& cand,
                          const std::vector<std::vector<std::string>>& ref, const std::vector<double>& w) {
  double c = 0, r = 0;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    c += double(cand[i].size());
    r += double(ref[i].size());
  }
  double score = 1.0;
  for (std::size_t n = 1; n <= w.size(); ++n) {
    double hit = 0, all = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      const auto cc = count_ngrams(cand[i], n);
      const auto rc = count_ngrams(ref[i], n);
      for (const auto& [g, k] : cc) {
        all += k;
        const auto it = rc.find(g);
        if (it != rc.end()) hit += std::min(k, it->second);
      }
    }
    const double p = all > 0 ? hit / all : 0.0;
    if (w[n - 1] > 0 && p == 0.0) return 0.0;
    score *= std::pow(p, w[n - 1]);
  }
  const double bp = c == 0 ? 0.0 : (c > r ? 1.0 : std::exp(1.0 - r / c));
  return bp * score;
}

struct BleuCase {
  std::vector<std::vector<std::string>> candidates, references;
};

// Candidates are noisy copies of their references over a small alphabet so
// that every n-gram order sees partial matches.
inline BleuCase random_bleu_case(Rng& rng) {
  static const std::vector<std::string> kWords{"a", "b", "c", "d", "e", "f"};
  BleuCase out;
  const std::size_t pairs = 1 + rng.below(8);
  for (std::size_t i = 0; i < pairs; ++i) {
    std::vector<std::string> ref(4 + rng.below(12));
    for (auto& w : ref) w = kWords[rng.below(kWords.size())];
    std::vector<std::string> cand;
    for (const auto& w : ref) {
      const double u = rng.unit();
      if (u < 0.1) continue;                                       // drop
      cand.push_back(u < 0.3 ? kWords[rng.below(kWords.size())] : w);  // substitute or keep
      if (rng.unit() < 0.08) cand.push_back(kWords[rng.below(kWords.size())]);
    }
    if (cand.empty()) cand.push_back(ref.front());
    out.candidates.push_back(std::move(cand));
    out.references.push_back(std::move(ref));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Central finite differences against the analytic batch gradient.

struct GradCheck {
  double max_rel = 0.0;
  std::string worst;  // "tensor[row,col]"
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

inline GradCheck finite_difference_check(nmt::ModelParams p, const textpipe::Batch& batch, double h = 1e-4,
                                         double floor = 1e-8) {
  const auto analytic = nmt::backward(p, batch).grad;
  const auto ga = analytic.tensors();
  auto ts = p.tensors();
  GradCheck out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    nmt::Matrix& m = *ts[i];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double saved = m(r, c);
        m(r, c) = saved + h;
        const double up = nmt::run_batch(p, batch).loss;
        m(r, c) = saved - h;
        const double down = nmt::run_batch(p, batch).loss;
        m(r, c) = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double exact = (*ga[i])(r, c);
        if (std::abs(numeric) < floor && std::abs(exact) < floor) {
          ++out.skipped;
          continue;
        }
        ++out.checked;
        const double rel = std::abs(numeric - exact) / std::max(std::abs(numeric), std::abs(exact));
        if (rel > out.max_rel) {
          out.max_rel = rel;
          out.worst = std::string(nmt::ModelParams::name(i)) + "[" + std::to_string(r) + "," + std::to_string(c) + "]";
        }
      }
    }
  }
  return out;
}

// Small random model and batch: embed 4, hidden 5, sequences up to 6 ids.
struct SmallProblem {
  nmt::Hyperparams hp;
  nmt::ModelParams params;
  textpipe::Batch batch;
};

inline SmallProblem small_problem(std::uint64_t seed, std::size_t batch_rows = 3) {
  SmallProblem sp;
  sp.hp.embed_dim = 4;
  sp.hp.hidden_dim = 5;
  sp.hp.attn_dim = 4;
  sp.hp.seed = seed;
  const std::size_t vs = 9, vt = 8;
  sp.params = nmt::init_model(sp.hp, vs, vt);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  // biases start at zero; perturb them so their gradients are exercised
  for (auto* m : sp.params.tensors()) {
    for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] += rng.uniform(-0.3, 0.3);
  }
  std::vector<std::vector<int>> src, tgt;
  for (std::size_t b = 0; b < batch_rows; ++b) {
    std::vector<int> s(1 + rng.below(6)), t;
    for (int& id : s) id = 4 + int(rng.below(vs - 4));
    t.push_back(textpipe::kStartId);
    for (std::size_t k = 0, n = rng.below(5); k < n; ++k) t.push_back(4 + int(rng.below(vt - 4)));
    t.push_back(textpipe::kEndId);
    src.push_back(std::move(s));
    tgt.push_back(std::move(t));
  }
  sp.batch = textpipe::make_batch(src, tgt);
  return sp;
}

}  // namespace geoqa::oracle
