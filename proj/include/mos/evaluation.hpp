#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mos/grid.hpp"
#include "mos/labels.hpp"
#include "mos/scan_io.hpp"

namespace mos {

/// Binary confusion over the moving class. Ground-truth Ignore entries are
/// excluded; a prediction of Ignore counts as static.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  void add(MovingLabel pred, MovingLabel gt);
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  std::int64_t total() const { return tp + fp + fn + tn; }
};

void accumulate(ConfusionCounts& counts, std::span<const MovingLabel> pred,
                std::span<const MovingLabel> gt);
void accumulate_grid(ConfusionCounts& counts, const Grid<MovingLabel>& pred,
                     const Grid<MovingLabel>& gt);

/// Intersection over union of the moving class: TP / (TP + FP + FN).
/// With an empty denominator there is nothing to get wrong; returns 1.
double iou_moving(const ConfusionCounts& counts);

struct SequenceEval {
  std::string id;
  std::int64_t frames = 0;
  ConfusionCounts counts;
  double iou = 0.0;
};

struct EvalReport {
  std::vector<SequenceEval> sequences;
  ConfusionCounts pooled;
  double pooled_iou = 0.0;
  double mean_iou = 0.0;  // unweighted mean over sequences
};

EvalReport finalize_report(std::vector<SequenceEval> sequences);

/// Scores prediction label files against a dataset's ground truth.
/// Sequences without ground-truth labels are skipped with a warning on
/// stderr. Prediction files live under
/// pred_root/sequences/<id>/predictions/NNNNNN.label.
EvalReport evaluate_predictions(const std::filesystem::path& dataset_root,
                                const std::filesystem::path& pred_root,
                                std::span<const std::string> sequence_ids,
                                const ClassMap& map);

void write_report_text(std::ostream& out, const EvalReport& report);
void write_report_kv(std::ostream& out, const EvalReport& report);

}  // namespace mos
