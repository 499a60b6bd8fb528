#pragma once

// Segmentation and apple metrics against ground truth.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "orchard/error.hpp"
#include "orchard/geometry.hpp"
#include "orchard/kdtree.hpp"

namespace orchard {

struct Confusion {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct SegmentationMetrics {
  Confusion counts;
  std::optional<double> recall, precision, f1, iou;
  double accuracy = 0.0;  // CA
};

inline std::optional<double> f1_score(std::optional<double> re, std::optional<double> pr) {
  if (!re || !pr || *re + *pr <= 0) return std::nullopt;
  return 2 * *re * *pr / (*re + *pr);
}

inline std::optional<double> iou_from_f1(std::optional<double> f1) {
  if (!f1) return std::nullopt;
  return *f1 / (2 - *f1);
}

inline SegmentationMetrics metrics_from_confusion(const Confusion& c) {
  SegmentationMetrics m;
  m.counts = c;
  const auto ratio = [](std::uint64_t a, std::uint64_t b) -> std::optional<double> {
    if (b == 0) return std::nullopt;
    return static_cast<double>(a) / static_cast<double>(b);
  };
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.f1 = f1_score(m.recall, m.precision);
  m.iou = iou_from_f1(m.f1);
  const auto n = c.tp + c.fp + c.fn + c.tn;
  m.accuracy = n ? static_cast<double>(c.tp + c.tn) / static_cast<double>(n) : 0.0;
  return m;
}

/// One-vs-rest metrics of class `cls`.
inline SegmentationMetrics segmentation_metrics(std::span<const int> pred, std::span<const int> gt, int cls) {
  if (pred.size() != gt.size()) throw Error(ErrorCode::ShapeError, "prediction and truth differ in length");
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == cls, g = gt[i] == cls;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return metrics_from_confusion(c);
}

struct AppleMatch {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (detection, truth)
  std::size_t tp = 0, fp = 0, fn = 0;
};

/// Mutual-nearest matching within `radius`: detection a and truth g pair up
/// when g is the closest truth to a, a is the closest detection to g and
/// their distance is below the radius.
inline AppleMatch match_apples(std::span<const Vec3> detections, std::span<const Vec3> truth, double radius = 0.10) {
  AppleMatch m;
  if (!detections.empty() && !truth.empty()) {
    const KdTree det_index(detections), gt_index(truth);
    for (std::size_t g = 0; g < truth.size(); ++g) {
      const auto a = det_index.nearest(truth[g]);
      if (!(a.distance < radius)) continue;
      if (gt_index.nearest(detections[a.index]).index != g) continue;
      m.pairs.emplace_back(a.index, g);
    }
    std::sort(m.pairs.begin(), m.pairs.end());
  }
  m.tp = m.pairs.size();
  m.fp = detections.size() - m.tp;
  m.fn = truth.size() - m.tp;
  return m;
}

/// TP_C / TP; nullopt when nothing matched.
inline std::optional<double> assignment_accuracy(std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                                 std::span<const int> pred_tree, std::span<const int> gt_tree) {
  if (pairs.empty()) return std::nullopt;
  std::size_t ok = 0;
  for (const auto& [a, g] : pairs) ok += pred_tree[a] == gt_tree[g];
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

/// Maps every predicted tree id to the ground-truth id holding most of its
/// points. Unlabeled entries (<= 0) are ignored; ties go to the smaller id.
inline std::map<int, int> majority_tree_mapping(std::span<const int> pred, std::span<const int> gt) {
  if (pred.size() != gt.size()) throw Error(ErrorCode::ShapeError, "prediction and truth differ in length");
  std::map<int, std::map<int, std::size_t>> votes;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] > 0 && gt[i] > 0) ++votes[pred[i]][gt[i]];
  std::map<int, int> out;
  for (const auto& [p, m] : votes) {
    int best = 0;
    std::size_t n = 0;
    for (const auto& [g, c] : m)
      if (c > n) {
        n = c;
        best = g;
      }
    out[p] = best;
  }
  return out;
}

inline int map_tree(const std::map<int, int>& mapping, int id) {
  const auto it = mapping.find(id);
  return it == mapping.end() ? 0 : it->second;
}

}  // namespace orchard
