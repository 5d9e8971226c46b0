#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "cocrf/error.hpp"
#include "cocrf/graph.hpp"
#include "cocrf/image.hpp"

namespace cocrf {

/// Superpixel id per pixel, row-major. Ids are dense 0..count-1.
struct LabelRaster {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<int> ids;

  int at(int row, int col) const { return ids[static_cast<std::size_t>(row) * width + col]; }
  std::size_t pixel_count() const noexcept { return ids.size(); }
};

struct SlicConfig {
  int target_count = 700;
  double compactness = 10.0;
  int max_iterations = 10;
};

/// Optional diagnostics from slic_segment. `objective[t]` is the summed
/// squared SLIC distance right after assignment step t.
struct SlicTrace {
  std::vector<double> objective;
  int clusters_before_merge = 0;
};

struct Point {
  double row = 0.0;
  double col = 0.0;
};

/// p's relation to q from the dominant centroid displacement; vertical wins
/// ties, identical centroids fall back to id order.
inline Relation tag_relation(Point p, Point q, int p_id = 0, int q_id = 1) {
  const double dr = q.row - p.row;
  const double dc = q.col - p.col;
  if (dr == 0.0 && dc == 0.0) return p_id < q_id ? Relation::LeftOf : Relation::RightOf;
  if (std::abs(dr) >= std::abs(dc)) return p.row < q.row ? Relation::Above : Relation::Below;
  return p.col < q.col ? Relation::LeftOf : Relation::RightOf;
}

namespace detail {

struct DisjointSets {
  std::vector<int> parent;
  std::vector<std::int64_t> size;

  explicit DisjointSets(int n) : parent(n), size(n, 0) { std::iota(parent.begin(), parent.end(), 0); }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

// 4-connected components of an arbitrary id map; returns component index per
// pixel (numbered in raster-scan order of first pixel) and the count.
inline std::pair<std::vector<int>, int> connected_components(int width, int height, const std::vector<int>& ids) {
  std::vector<int> comp(ids.size(), -1);
  std::vector<int> stack;
  int count = 0;
  for (int start = 0; start < static_cast<int>(ids.size()); ++start) {
    if (comp[start] != -1) continue;
    comp[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      const int r = i / width, c = i % width;
      const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& rc : nbr) {
        if (rc[0] < 0 || rc[0] >= height || rc[1] < 0 || rc[1] >= width) continue;
        const int j = rc[0] * width + rc[1];
        if (comp[j] == -1 && ids[j] == ids[i]) {
          comp[j] = count;
          stack.push_back(j);
        }
      }
    }
    ++count;
  }
  return {std::move(comp), count};
}

// Components smaller than min_size are absorbed into the adjacent region
// with the longest shared boundary, except the largest component of each
// cluster. The result is relabeled densely in raster-scan order.
inline LabelRaster enforce_connectivity(int width, int height, const std::vector<int>& assignment,
                                        std::int64_t min_size) {
  auto [comp, ncomp] = connected_components(width, height, assignment);
  DisjointSets sets(ncomp);
  for (int c : comp) ++sets.size[c];

  // The largest piece of every cluster survives whatever its size; only
  // the stray fragments are folded into neighbors.
  std::vector<int> cluster_of(ncomp, -1);
  for (std::size_t i = 0; i < comp.size(); ++i) cluster_of[comp[i]] = assignment[i];
  std::map<int, int> largest;
  for (int c = 0; c < ncomp; ++c) {
    auto [it, fresh] = largest.emplace(cluster_of[c], c);
    if (!fresh && sets.size[c] > sets.size[it->second]) it->second = c;
  }
  std::vector<char> anchor(ncomp, 0);
  for (const auto& [cluster, c] : largest) anchor[c] = 1;

  // Shared boundary length between neighboring components.
  std::vector<std::map<int, std::int64_t>> adjacent(ncomp);
  auto touch = [&](int a, int b) {
    if (a == b) return;
    ++adjacent[a][b];
    ++adjacent[b][a];
  };
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const int a = comp[r * width + c];
      if (c + 1 < width) touch(a, comp[r * width + c + 1]);
      if (r + 1 < height) touch(a, comp[(r + 1) * width + c]);
    }

  // Small fragments join the neighbor they share the longest boundary with,
  // smallest fragments first.
  std::vector<int> order(ncomp);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sets.size[a] < sets.size[b]; });
  bool changed = true;
  while (changed) {
    changed = false;
    for (int c : order) {
      if (anchor[c] || sets.find(c) != c || sets.size[c] >= min_size) continue;
      std::map<int, std::int64_t> shared;
      for (const auto& [nb, len] : adjacent[c]) {
        const int root = sets.find(nb);
        if (root != c) shared[root] += len;
      }
      int best = -1;
      std::int64_t best_len = 0;
      for (const auto& [root, len] : shared)
        if (len > best_len) {
          best = root;
          best_len = len;
        }
      if (best == -1) continue;
      sets.parent[c] = best;
      sets.size[best] += sets.size[c];
      for (const auto& [nb, len] : adjacent[c]) adjacent[best][nb] += len;
      adjacent[c].clear();
      changed = true;
    }
  }

  LabelRaster out{width, height, 0, std::vector<int>(assignment.size())};
  std::vector<int> dense(ncomp, -1);
  for (std::size_t i = 0; i < comp.size(); ++i) {
    const int root = sets.find(comp[i]);
    if (dense[root] == -1) dense[root] = out.count++;
    out.ids[i] = dense[root];
  }
  return out;
}

}  // namespace detail

/// SLIC over-segmentation in CIELAB space with 4-connectivity enforcement.
inline LabelRaster slic_segment(const RgbImage& image, const SlicConfig& cfg, SlicTrace* trace = nullptr) {
  if (image.empty()) throw Error(Errc::InvalidArgument, "image is empty");
  if (cfg.target_count < 1) throw Error(Errc::InvalidArgument, "target_count must be >= 1");
  if (!(cfg.compactness > 0.0)) throw Error(Errc::InvalidArgument, "compactness must be positive");
  const int W = image.width, H = image.height;
  const std::size_t N = image.pixel_count();
  if (N < static_cast<std::size_t>(cfg.target_count))
    throw Error(Errc::ImageTooSmall, "image has fewer pixels than the superpixel target");

  std::vector<std::array<double, 3>> lab(N);
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      const auto* px = image.at(r, c);
      lab[static_cast<std::size_t>(r) * W + c] = rgb_to_lab(px[0], px[1], px[2]);
    }

  const double step = std::sqrt(static_cast<double>(N) / cfg.target_count);
  const int ny = std::max(1, static_cast<int>(std::lround(H / step)));
  const int nx = std::max(1, static_cast<int>(std::lround(W / step)));

  struct Center {
    double l, a, b, row, col;
  };
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);

  auto gradient = [&](int r, int c) {
    if (r <= 0 || c <= 0 || r >= H - 1 || c >= W - 1) return std::numeric_limits<double>::infinity();
    double g = 0.0;
    const auto& right = lab[static_cast<std::size_t>(r) * W + c + 1];
    const auto& left = lab[static_cast<std::size_t>(r) * W + c - 1];
    const auto& down = lab[static_cast<std::size_t>(r + 1) * W + c];
    const auto& up = lab[static_cast<std::size_t>(r - 1) * W + c];
    for (int k = 0; k < 3; ++k) g += (right[k] - left[k]) * (right[k] - left[k]) + (down[k] - up[k]) * (down[k] - up[k]);
    return g;
  };

  for (int i = 0; i < ny; ++i) {
    for (int j = 0; j < nx; ++j) {
      int r = std::min(H - 1, static_cast<int>((i + 0.5) * H / ny));
      int c = std::min(W - 1, static_cast<int>((j + 0.5) * W / nx));
      // Seed at the lowest-gradient pixel of the 3x3 neighborhood.
      double best = gradient(r, c);
      int br = r, bc = c;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          const double gv = gradient(r + dr, c + dc);
          if (gv < best) {
            best = gv;
            br = r + dr;
            bc = c + dc;
          }
        }
      const auto& px = lab[static_cast<std::size_t>(br) * W + bc];
      centers.push_back({px[0], px[1], px[2], static_cast<double>(br), static_cast<double>(bc)});
    }
  }

  const double spatial_weight = (cfg.compactness / step) * (cfg.compactness / step);
  auto distance = [&](const Center& ctr, std::size_t i, int r, int c) {
    const auto& px = lab[i];
    const double dl = px[0] - ctr.l, da = px[1] - ctr.a, db = px[2] - ctr.b;
    const double dr = r - ctr.row, dc = c - ctr.col;
    return dl * dl + da * da + db * db + spatial_weight * (dr * dr + dc * dc);
  };

  std::vector<int> assign(N, -1);
  std::vector<double> dist(N);
  const int window = static_cast<int>(std::ceil(step));
  for (int iter = 0; iter < std::max(1, cfg.max_iterations); ++iter) {
    // A pixel's current center is always a candidate, so no pixel gets worse.
    for (std::size_t i = 0; i < N; ++i) {
      const int r = static_cast<int>(i / W), c = static_cast<int>(i % W);
      dist[i] = assign[i] >= 0 ? distance(centers[assign[i]], i, r, c) : std::numeric_limits<double>::infinity();
    }
    for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
      const auto& ctr = centers[k];
      const int r0 = std::max(0, static_cast<int>(std::floor(ctr.row)) - window);
      const int r1 = std::min(H - 1, static_cast<int>(std::ceil(ctr.row)) + window);
      const int c0 = std::max(0, static_cast<int>(std::floor(ctr.col)) - window);
      const int c1 = std::min(W - 1, static_cast<int>(std::ceil(ctr.col)) + window);
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) {
          const std::size_t i = static_cast<std::size_t>(r) * W + c;
          const double d = distance(ctr, i, r, c);
          if (d < dist[i]) {
            dist[i] = d;
            assign[i] = k;
          }
        }
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (assign[i] >= 0) continue;
      const int r = static_cast<int>(i / W), c = static_cast<int>(i % W);
      for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
        const double d = distance(centers[k], i, r, c);
        if (d < dist[i]) {
          dist[i] = d;
          assign[i] = k;
        }
      }
    }
    if (trace) trace->objective.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));

    std::vector<std::array<double, 6>> sums(centers.size(), std::array<double, 6>{});
    for (std::size_t i = 0; i < N; ++i) {
      auto& s = sums[assign[i]];
      s[0] += lab[i][0];
      s[1] += lab[i][1];
      s[2] += lab[i][2];
      s[3] += static_cast<double>(i / W);
      s[4] += static_cast<double>(i % W);
      s[5] += 1.0;
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& s = sums[k];
      if (s[5] == 0.0) continue;
      centers[k] = {s[0] / s[5], s[1] / s[5], s[2] / s[5], s[3] / s[5], s[4] / s[5]};
    }
  }
  if (trace) trace->clusters_before_merge = static_cast<int>(centers.size());

  const auto min_size = std::max<std::int64_t>(1, static_cast<std::int64_t>(N / cfg.target_count / 2));
  return detail::enforce_connectivity(W, H, assign, min_size);
}

struct AdjacentPair {
  int p = 0;
  int q = 0;
  double boundary_length = 0.0;

  friend bool operator==(const AdjacentPair&, const AdjacentPair&) = default;
};

/// Every pair of superpixels that touch under 4-adjacency, sorted by (p, q),
/// with the number of straddling pixel pairs as boundary length.
inline std::vector<AdjacentPair> build_adjacency(const LabelRaster& raster) {
  std::map<std::pair<int, int>, std::int64_t> counts;
  const int W = raster.width, H = raster.height;
  auto touch = [&](int a, int b) {
    if (a == b) return;
    ++counts[{std::min(a, b), std::max(a, b)}];
  };
  for (int r = 0; r < H; ++r)
    for (int c = 0; c < W; ++c) {
      if (c + 1 < W) touch(raster.at(r, c), raster.at(r, c + 1));
      if (r + 1 < H) touch(raster.at(r, c), raster.at(r + 1, c));
    }
  std::vector<AdjacentPair> out;
  out.reserve(counts.size());
  for (const auto& [pq, n] : counts) out.push_back({pq.first, pq.second, static_cast<double>(n)});
  return out;
}

struct RegionGeometry {
  Point centroid;
  std::int64_t area = 0;
};

inline std::vector<RegionGeometry> region_geometry(const LabelRaster& raster) {
  std::vector<RegionGeometry> out(static_cast<std::size_t>(raster.count));
  std::vector<double> rs(out.size(), 0.0), cs(out.size(), 0.0);
  for (int r = 0; r < raster.height; ++r)
    for (int c = 0; c < raster.width; ++c) {
      const int id = raster.at(r, c);
      rs[id] += r;
      cs[id] += c;
      ++out[id].area;
    }
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].area > 0) out[i].centroid = {rs[i] / out[i].area, cs[i] / out[i].area};
  return out;
}

/// Graph with node geometry and relation-tagged edges; features are empty.
inline SuperpixelGraph make_skeleton(const LabelRaster& raster, int num_classes) {
  SuperpixelGraph g;
  g.num_classes = num_classes;
  const auto geometry = region_geometry(raster);
  for (int i = 0; i < raster.count; ++i) {
    if (geometry[i].area == 0) throw Error(Errc::InvalidArgument, "raster ids are not dense");
    g.nodes.push_back({i, geometry[i].centroid.row, geometry[i].centroid.col, geometry[i].area, {}});
  }
  for (const auto& pair : build_adjacency(raster)) {
    Edge e;
    e.p = pair.p;
    e.q = pair.q;
    e.relation = tag_relation(geometry[pair.p].centroid, geometry[pair.q].centroid, pair.p, pair.q);
    e.boundary_length = pair.boundary_length;
    g.edges.push_back(std::move(e));
  }
  return g;
}

/// Majority ground-truth class per superpixel (ties go to the smaller id).
inline Labeling project_labels(const LabelRaster& raster, const GrayRaster& truth) {
  if (truth.width != raster.width || truth.height != raster.height)
    throw Error(Errc::DimensionMismatch, "ground-truth raster size differs from the image");
  std::vector<std::map<int, std::int64_t>> votes(static_cast<std::size_t>(raster.count));
  for (std::size_t i = 0; i < raster.ids.size(); ++i) ++votes[raster.ids[i]][truth.values[i]];
  Labeling out(votes.size(), 0);
  for (std::size_t s = 0; s < votes.size(); ++s) {
    std::int64_t best = -1;
    for (const auto& [cls, n] : votes[s])
      if (n > best) {
        best = n;
        out[s] = cls;
      }
  }
  return out;
}

inline GrayRaster to_gray(const LabelRaster& raster) { return {raster.width, raster.height, raster.ids}; }

inline LabelRaster from_gray(const GrayRaster& gray) {
  LabelRaster out{gray.width, gray.height, 0, gray.values};
  int max_id = -1;
  for (int v : out.ids) max_id = std::max(max_id, v);
  out.count = max_id + 1;
  return out;
}

}  // namespace cocrf
