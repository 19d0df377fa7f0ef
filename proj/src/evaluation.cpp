#include "mos/evaluation.hpp"

#include <iomanip>
#include <iostream>
#include <stdexcept>

namespace mos {

void ConfusionCounts::add(MovingLabel pred, MovingLabel gt) {
  if (gt == MovingLabel::Ignore) return;
  const bool pred_moving = pred == MovingLabel::Moving;
  if (gt == MovingLabel::Moving) {
    pred_moving ? ++tp : ++fn;
  } else {
    pred_moving ? ++fp : ++tn;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

void accumulate(ConfusionCounts& counts, std::span<const MovingLabel> pred,
                std::span<const MovingLabel> gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("accumulate: " + std::to_string(pred.size()) +
                                " predictions vs " + std::to_string(gt.size()) +
                                " ground-truth labels");
  for (std::size_t i = 0; i < pred.size(); ++i) counts.add(pred[i], gt[i]);
}

void accumulate_grid(ConfusionCounts& counts, const Grid<MovingLabel>& pred,
                     const Grid<MovingLabel>& gt) {
  if (!pred.same_shape(gt))
    throw std::invalid_argument("accumulate_grid: shape mismatch");
  accumulate(counts, std::span<const MovingLabel>(pred.data(), pred.size()),
             std::span<const MovingLabel>(gt.data(), gt.size()));
}

double iou_moving(const ConfusionCounts& counts) {
  const std::int64_t denom = counts.tp + counts.fp + counts.fn;
  if (denom == 0) return 1.0;
  return double(counts.tp) / double(denom);
}

EvalReport finalize_report(std::vector<SequenceEval> sequences) {
  EvalReport report;
  report.sequences = std::move(sequences);
  double iou_sum = 0.0;
  for (SequenceEval& seq : report.sequences) {
    seq.iou = iou_moving(seq.counts);
    report.pooled += seq.counts;
    iou_sum += seq.iou;
  }
  report.pooled_iou = iou_moving(report.pooled);
  report.mean_iou = report.sequences.empty()
                        ? 1.0
                        : iou_sum / double(report.sequences.size());
  return report;
}

EvalReport evaluate_predictions(const std::filesystem::path& dataset_root,
                                const std::filesystem::path& pred_root,
                                std::span<const std::string> sequence_ids,
                                const ClassMap& map) {
  std::vector<SequenceEval> evals;
  for (const std::string& id : sequence_ids) {
    const DatasetSequence seq = load_sequence(dataset_root, id);
    if (!seq.has_labels) {
      std::cerr << "warning: sequence " << id
                << " has no ground-truth labels, skipping\n";
      continue;
    }
    SequenceEval eval;
    eval.id = id;
    eval.frames = std::int64_t(seq.size());
    for (std::size_t f = 0; f < seq.size(); ++f) {
      const Scan scan = seq.read_scan(f);
      const std::vector<MovingLabel> gt =
          read_semantic_labels(seq.label_file(f), scan.size(), map);
      const std::filesystem::path pred_file =
          pred_root / "sequences" / id / "predictions" /
          seq.scan_files[f].filename().replace_extension(".label");
      const std::vector<MovingLabel> pred =
          read_semantic_labels(pred_file, scan.size(), map);
      accumulate(eval.counts, pred, gt);
    }
    evals.push_back(std::move(eval));
  }
  return finalize_report(std::move(evals));
}

void write_report_text(std::ostream& out, const EvalReport& report) {
  out << std::fixed << std::setprecision(4);
  for (const SequenceEval& seq : report.sequences)
    out << "sequence " << seq.id << ": iou " << seq.iou << "  (tp " << seq.counts.tp
        << " fp " << seq.counts.fp << " fn " << seq.counts.fn << " tn "
        << seq.counts.tn << ", " << seq.frames << " frames)\n";
  out << "pooled iou " << report.pooled_iou << "  mean iou " << report.mean_iou
      << "\n";
}

void write_report_kv(std::ostream& out, const EvalReport& report) {
  out << std::setprecision(17);
  for (const SequenceEval& seq : report.sequences) {
    out << "seq." << seq.id << ".frames " << seq.frames << '\n';
    out << "seq." << seq.id << ".tp " << seq.counts.tp << '\n';
    out << "seq." << seq.id << ".fp " << seq.counts.fp << '\n';
    out << "seq." << seq.id << ".fn " << seq.counts.fn << '\n';
    out << "seq." << seq.id << ".tn " << seq.counts.tn << '\n';
    out << "seq." << seq.id << ".iou " << seq.iou << '\n';
  }
  out << "pooled.tp " << report.pooled.tp << '\n';
  out << "pooled.fp " << report.pooled.fp << '\n';
  out << "pooled.fn " << report.pooled.fn << '\n';
  out << "pooled.tn " << report.pooled.tn << '\n';
  out << "pooled.iou " << report.pooled_iou << '\n';
  out << "mean.iou " << report.mean_iou << '\n';
}

}  // namespace mos
