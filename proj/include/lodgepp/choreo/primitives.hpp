#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lodgepp/core/error.hpp"
#include "lodgepp/motion/kinematics.hpp"
#include "lodgepp/music/features.hpp"

namespace lodgepp::choreo {

inline constexpr int kPrimitiveWindow = 8;   // frames per primitive
inline constexpr int kHalfWindow = 4;
inline constexpr int kBeatMinSeparation = 10;
inline constexpr int kBeatSmoothWindow = 5;

// d_s: 8-frame key motions re-targeted onto music beats.
// d_h: 8-frame boundary motions straddling segment joints i*n.
struct KeyMotion {
  int target_frame = 0;  // a music-beat frame; window is [target-4, target+4)
  Mat frames;            // 8 x 139
};

struct BoundaryMotion {
  int boundary = 0;  // segment boundary index i; window is [i*n-4, i*n+4)
  Mat frames;        // 8 x 139
};

struct DancePrimitives {
  std::vector<KeyMotion> key_motions;
  std::vector<BoundaryMotion> boundary_motions;

  void validate(Eigen::Index total_frames, int segment_length) const {
    std::vector<int> seen;
    for (const auto& b : boundary_motions) {
      int start = b.boundary * segment_length - kHalfWindow;
      if (start < 0 || start + kPrimitiveWindow > total_frames)
        throw DataError("boundary window out of range");
      if (std::find(seen.begin(), seen.end(), b.boundary) != seen.end())
        throw DataError("duplicate boundary motion");
      seen.push_back(b.boundary);
    }
    for (const auto& k : key_motions) {
      int start = k.target_frame - kHalfWindow;
      if (start < 0 || start + kPrimitiveWindow > total_frames)
        throw DataError("key motion window out of range");
    }
  }
};

// Local minima of the smoothed joint-speed curve that fall below its median,
// at least kBeatMinSeparation frames apart.
inline std::vector<int> detect_dance_beats(const motion::MotionSequence& seq,
                                           const motion::Skeleton& skel) {
  if (seq.frames() < 16)
    throw SequenceTooShort("need at least 16 frames for beat detection");
  Vec speed = motion::joint_speed(seq, skel);
  const Eigen::Index n = speed.size();
  Vec smooth(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index lo = std::max<Eigen::Index>(i - kBeatSmoothWindow / 2, 0);
    Eigen::Index hi = std::min<Eigen::Index>(i + kBeatSmoothWindow / 2, n - 1);
    smooth(i) = speed.segment(lo, hi - lo + 1).mean();
  }

  std::vector<double> sorted(smooth.data(), smooth.data() + n);
  std::sort(sorted.begin(), sorted.end());
  double median = 0.5 * (sorted[static_cast<size_t>((n - 1) / 2)] +
                         sorted[static_cast<size_t>(n / 2)]);

  // Relative tolerance keeps floating-point wobble on flat curves from
  // registering as minima.
  const double tol = 1e-9 * smooth.maxCoeff();
  struct Candidate {
    int frame;
    double value;
  };
  std::vector<Candidate> candidates;
  for (Eigen::Index i = 1; i + 1 < n; ++i)
    if (smooth(i) + tol < smooth(i - 1) && smooth(i) + tol < smooth(i + 1) &&
        smooth(i) + tol < median)
      candidates.push_back({static_cast<int>(i), smooth(i)});

  // Deepest minima win when two candidates are closer than the separation.
  std::sort(candidates.begin(), candidates.end(), [](auto& a, auto& b) {
    return a.value != b.value ? a.value < b.value : a.frame < b.frame;
  });
  std::vector<int> beats;
  for (const auto& c : candidates) {
    bool clear = true;
    for (int b : beats)
      if (std::abs(b - c.frame) < kBeatMinSeparation) {
        clear = false;
        break;
      }
    if (clear) beats.push_back(c.frame);
  }
  std::sort(beats.begin(), beats.end());
  return beats;
}

// Extracts d_s (8 frames around each dance beat, re-targeted to the nearest
// music beat) and d_h (8 frames straddling each segment boundary). Key
// motions whose re-targeted window leaves bounds or collides with a boundary
// window are dropped.
inline DancePrimitives extract_primitives(const motion::MotionSequence& seq,
                                          const motion::Skeleton& skel,
                                          const music::BeatGrid& music_beats,
                                          int n = 128) {
  const Eigen::Index total = seq.frames();
  if (total < n) throw SequenceTooShort("sequence shorter than one segment");

  DancePrimitives prims;
  const int segments = static_cast<int>(total / n);
  for (int i = 1; i < segments; ++i) {
    BoundaryMotion b;
    b.boundary = i;
    b.frames = seq.data.middleRows(i * n - kHalfWindow, kPrimitiveWindow);
    prims.boundary_motions.push_back(std::move(b));
  }

  auto overlaps_boundary = [&](int target) {
    for (const auto& b : prims.boundary_motions) {
      int center = b.boundary * n;
      if (std::abs(center - target) < kPrimitiveWindow) return true;
    }
    return false;
  };

  if (!music_beats.beat_frames.empty()) {
    for (int beat : detect_dance_beats(seq, skel)) {
      if (beat < kHalfWindow || beat > total - kHalfWindow) continue;
      int target = music_beats.beat_frames.front();
      for (int m : music_beats.beat_frames)
        if (std::abs(m - beat) < std::abs(target - beat)) target = m;
      if (target < kHalfWindow || target > total - kHalfWindow) continue;
      if (overlaps_boundary(target)) continue;
      KeyMotion k;
      k.target_frame = target;
      k.frames = seq.data.middleRows(beat - kHalfWindow, kPrimitiveWindow);
      prims.key_motions.push_back(std::move(k));
    }
  }
  prims.validate(total, n);
  return prims;
}

struct PrimitiveCanvas {
  Mat canvas;  // L x 139, zero where unmasked
  Vec mask;    // L, 1 where a primitive frame is present
};

// Places primitive frames on a length-L canvas; boundary motions win
// conflicts with key motions.
inline PrimitiveCanvas build_primitive_canvas(const DancePrimitives& prims,
                                              Eigen::Index total_frames,
                                              int n) {
  prims.validate(total_frames, n);
  PrimitiveCanvas out;
  out.canvas = Mat::Zero(total_frames, motion::layout::kFrameDim);
  out.mask = Vec::Zero(total_frames);
  for (const auto& k : prims.key_motions) {
    Eigen::Index start = k.target_frame - kHalfWindow;
    out.canvas.middleRows(start, kPrimitiveWindow) = k.frames;
    out.mask.segment(start, kPrimitiveWindow).setOnes();
  }
  Vec boundary_mask = Vec::Zero(total_frames);
  for (const auto& b : prims.boundary_motions) {
    Eigen::Index start = static_cast<Eigen::Index>(b.boundary) * n - kHalfWindow;
    if (boundary_mask.segment(start, kPrimitiveWindow).sum() > 0.0)
      throw OverlapConflict("boundary windows collide");
    boundary_mask.segment(start, kPrimitiveWindow).setOnes();
    out.canvas.middleRows(start, kPrimitiveWindow) = b.frames;
    out.mask.segment(start, kPrimitiveWindow).setOnes();
  }
  return out;
}

// --- JSON serialization ------------------------------------------------------

inline nlohmann::json primitives_to_json(const DancePrimitives& prims) {
  nlohmann::json j;
  auto frames_json = [](const Mat& m) {
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      auto row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["key_motions"] = nlohmann::json::array();
  for (const auto& k : prims.key_motions)
    j["key_motions"].push_back(
        {{"target", k.target_frame}, {"frames", frames_json(k.frames)}});
  j["boundary_motions"] = nlohmann::json::array();
  for (const auto& b : prims.boundary_motions)
    j["boundary_motions"].push_back(
        {{"boundary", b.boundary}, {"frames", frames_json(b.frames)}});
  return j;
}

inline DancePrimitives primitives_from_json(const nlohmann::json& j) {
  auto frames_from = [](const nlohmann::json& rows) {
    Mat m(static_cast<Eigen::Index>(rows.size()), motion::layout::kFrameDim);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const auto& row = rows[static_cast<size_t>(i)];
      if (row.size() != motion::layout::kFrameDim)
        throw IoError("primitive frame has wrong width");
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(i, c) = row[static_cast<size_t>(c)].get<double>();
    }
    return m;
  };
  DancePrimitives prims;
  for (const auto& k : j.at("key_motions"))
    prims.key_motions.push_back(
        {k.at("target").get<int>(), frames_from(k.at("frames"))});
  for (const auto& b : j.at("boundary_motions"))
    prims.boundary_motions.push_back(
        {b.at("boundary").get<int>(), frames_from(b.at("frames"))});
  return prims;
}

inline void save_primitives(const DancePrimitives& prims,
                            const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << primitives_to_json(prims).dump();
}

inline DancePrimitives load_primitives(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid primitives json: " + std::string(e.what()));
  }
  return primitives_from_json(j);
}

}  // namespace lodgepp::choreo
