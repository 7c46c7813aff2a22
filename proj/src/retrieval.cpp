#include "geopipe/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "geopipe/errors.hpp"

namespace geopipe {

namespace {

std::int64_t cell_key(int ix, int iy) {
  return (static_cast<std::int64_t>(ix) << 32) ^
         (static_cast<std::int64_t>(iy) & 0xffffffffLL);
}

int cell_of(double v, double cell) { return static_cast<int>(std::floor(v / cell)); }

// The grid prunes with planar distances while the exact metric is
// ellipsoidal; the tangent-plane error stays far below this slack for
// urban-scale extents.
constexpr double kPruneSlackRel = 5e-3;
constexpr double kPruneSlackAbs = 1.0;  // meters

}  // namespace

RetrievalIndex RetrievalIndex::build(std::vector<PanoEntry> entries,
                                     double cell_size_m) {
  if (!(cell_size_m > 0.0)) throw SchemaError("index cell size must be > 0");
  RetrievalIndex idx;
  idx.cell_size_ = cell_size_m;
  idx.entries_ = std::move(entries);

  std::unordered_set<std::string> seen;
  for (const auto& e : idx.entries_) {
    if (!seen.insert(e.pano_id).second) {
      throw DuplicatePanoIdError("duplicate pano_id: " + e.pano_id);
    }
  }
  if (idx.entries_.empty()) return idx;

  idx.anchor_ = idx.entries_.front().location;
  idx.planar_.reserve(idx.entries_.size());
  for (std::uint32_t i = 0; i < idx.entries_.size(); ++i) {
    const Eigen::Vector2d en = east_north_offset(idx.anchor_, idx.entries_[i].location);
    idx.planar_.push_back(en);
    idx.cells_[cell_key(cell_of(en.x(), cell_size_m), cell_of(en.y(), cell_size_m))]
        .push_back(i);
  }
  return idx;
}

RetrievalResult RetrievalIndex::nearest(const GeoPoint& query,
                                        double threshold_m) const {
  if (!(threshold_m > 0.0)) throw SchemaError("threshold must be > 0");
  RetrievalResult best;
  if (entries_.empty()) return best;

  const Eigen::Vector2d q = east_north_offset(anchor_, query);
  const int qx = cell_of(q.x(), cell_size_);
  const int qy = cell_of(q.y(), cell_size_);

  std::string best_id;
  double best_dist = std::numeric_limits<double>::infinity();

  auto consider = [&](std::uint32_t i) {
    const double d = geodesic_inverse(query, entries_[i].location);
    if (d < best_dist || (d == best_dist && entries_[i].pano_id < best_id)) {
      best_dist = d;
      best_id = entries_[i].pano_id;
    }
  };
  auto consider_cell = [&](int cx, int cy) {
    const auto it = cells_.find(cell_key(cx, cy));
    if (it == cells_.end()) return;
    for (const std::uint32_t i : it->second) consider(i);
  };

  // Expanding Chebyshev rings; a cell in ring r holds no point with planar
  // distance below (r - 1) * cell_size, so once that bound (minus the
  // planar-vs-geodesic slack) exceeds the best exact distance, the best is
  // final. The threshold is applied after the search so the reported
  // distance always matches a brute-force scan.
  constexpr int kRingBudget = 64;  // empty-region fallback before full scan
  for (int r = 0;; ++r) {
    if (r > 0 &&
        ((r - 1) * cell_size_) * (1.0 - kPruneSlackRel) - kPruneSlackAbs >
            best_dist) {
      break;
    }
    if (r > kRingBudget && best_dist == std::numeric_limits<double>::infinity()) {
      for (std::uint32_t i = 0; i < entries_.size(); ++i) consider(i);
      break;
    }
    if (r == 0) {
      consider_cell(qx, qy);
    } else {
      for (int dx = -r; dx <= r; ++dx) {
        consider_cell(qx + dx, qy - r);
        consider_cell(qx + dx, qy + r);
      }
      for (int dy = -r + 1; dy <= r - 1; ++dy) {
        consider_cell(qx - r, qy + dy);
        consider_cell(qx + r, qy + dy);
      }
    }
  }

  best.distance_m = best_dist;
  if (best_dist <= threshold_m) best.pano_id = best_id;
  return best;
}

std::string to_string(ReliabilityLabel label) {
  switch (label) {
    case ReliabilityLabel::kValid: return "valid";
    case ReliabilityLabel::kInvalid: return "invalid";
    case ReliabilityLabel::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

ReliabilityLabel reliability_label_from_string(const std::string& s) {
  if (s == "valid") return ReliabilityLabel::kValid;
  if (s == "invalid") return ReliabilityLabel::kInvalid;
  if (s == "unlabeled") return ReliabilityLabel::kUnlabeled;
  throw SchemaError("unknown reliability label: " + s);
}

void Manifest::validate() const {
  for (const auto& [frame_id, a] : frames) {
    if (!a.pano_id.empty() && panos.find(a.pano_id) == panos.end()) {
      throw SchemaError("manifest frame " + frame_id +
                        " references unknown pano " + a.pano_id);
    }
  }
}

void Manifest::merge(const Manifest& other) {
  for (const auto& [id, rec] : other.panos) panos[id] = rec;
  for (const auto& [id, a] : other.frames) frames[id] = a;
  validate();
}

Manifest assign_frames(const RetrievalIndex& index,
                       const std::vector<FrameQuery>& frames, double threshold_m) {
  Manifest m;
  std::unordered_map<std::string, const PanoEntry*> by_id;
  for (const auto& e : index.entries()) by_id[e.pano_id] = &e;

  for (const auto& f : frames) {
    const RetrievalResult r = index.nearest(f.location, threshold_m);
    FrameAssignment a;
    a.pano_id = r.pano_id;
    a.distance_m = r.distance_m;
    m.frames[f.frame_id] = a;
    if (!r.is_none()) {
      PanoRecord rec;
      rec.location = by_id.at(r.pano_id)->location;
      m.panos.emplace(r.pano_id, std::move(rec));
    }
  }
  m.validate();
  return m;
}

StorageReport storage_report(const Manifest& manifest, std::size_t frames_count,
                             std::size_t cameras_per_frame, std::size_t tile_bytes,
                             std::size_t crop_bytes) {
  if (tile_bytes == 0 || crop_bytes == 0) {
    throw SchemaError("storage_report: byte sizes must be positive");
  }
  std::unordered_set<std::string> used;
  for (const auto& [frame, a] : manifest.frames) {
    if (!a.pano_id.empty()) used.insert(a.pano_id);
  }
  StorageReport rep;
  rep.used_panos = used.size();
  rep.dedup_bytes = rep.used_panos * 18 * tile_bytes;
  rep.naive_bytes = frames_count * cameras_per_frame * crop_bytes;
  rep.reduction_fraction =
      rep.naive_bytes == 0
          ? 0.0
          : 1.0 - static_cast<double>(rep.dedup_bytes) /
                      static_cast<double>(rep.naive_bytes);
  return rep;
}

}  // namespace geopipe
