#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "geopipe/geodesy.hpp"

namespace geopipe {

inline constexpr double kDefaultRetrievalThreshold = 25.0;  // meters

struct PanoEntry {
  std::string pano_id;
  GeoPoint location;
};

/// NONE is represented by an empty pano_id.
struct RetrievalResult {
  std::string pano_id;  ///< empty = NONE
  double distance_m = std::numeric_limits<double>::infinity();
  std::string query_frame;

  bool is_none() const { return pano_id.empty(); }
};

/// Immutable spatial index of panorama capture points. A uniform grid over
/// local-tangent-plane coordinates prunes candidates; exact distances are
/// ellipsoidal. Queries answer identically to a brute-force scan, with ties
/// broken by lexicographically smallest pano_id.
class RetrievalIndex {
 public:
  /// Throws DuplicatePanoIdError on repeated ids.
  static RetrievalIndex build(std::vector<PanoEntry> entries,
                              double cell_size_m = kDefaultRetrievalThreshold);

  /// Nearest entry, or NONE when the minimum distance exceeds `threshold_m`
  /// (strictly greater) or the index is empty.
  RetrievalResult nearest(const GeoPoint& query,
                          double threshold_m = kDefaultRetrievalThreshold) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<PanoEntry>& entries() const { return entries_; }

 private:
  RetrievalIndex() = default;

  std::vector<PanoEntry> entries_;
  std::vector<Eigen::Vector2d> planar_;  // east/north meters from anchor
  GeoPoint anchor_;
  double cell_size_ = kDefaultRetrievalThreshold;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
};

/// Ternary reliability label of a frame's retrieved panorama.
enum class ReliabilityLabel { kValid, kInvalid, kUnlabeled };
std::string to_string(ReliabilityLabel label);
ReliabilityLabel reliability_label_from_string(const std::string& s);

struct FrameAssignment {
  std::string pano_id;  ///< empty = NONE
  double distance_m = std::numeric_limits<double>::infinity();
  ReliabilityLabel label = ReliabilityLabel::kUnlabeled;
};

struct PanoRecord {
  GeoPoint location;
  std::map<std::string, std::string> files;  // role -> path
};

/// Frame -> panorama mapping plus the panorama registry. Keys are kept in
/// sorted maps so serialization is reproducible.
struct Manifest {
  std::map<std::string, PanoRecord> panos;
  std::map<std::string, FrameAssignment> frames;

  /// Every frame's non-NONE pano_id must exist in the registry.
  void validate() const;
  void merge(const Manifest& other);
};

struct FrameQuery {
  std::string frame_id;
  GeoPoint location;
};

/// Maps each frame independently through `nearest`; many-to-one onto the
/// used panorama set. Registry entries are added for every hit.
Manifest assign_frames(const RetrievalIndex& index,
                       const std::vector<FrameQuery>& frames, double threshold_m);

struct StorageReport {
  std::size_t used_panos = 0;
  std::size_t dedup_bytes = 0;
  std::size_t naive_bytes = 0;
  double reduction_fraction = 0.0;
};

/// Storage cost of the deduplicated panorama scheme (18 tiles per used
/// panorama) against naive per-frame, per-camera crops.
StorageReport storage_report(const Manifest& manifest, std::size_t frames_count,
                             std::size_t cameras_per_frame, std::size_t tile_bytes,
                             std::size_t crop_bytes);

}  // namespace geopipe
