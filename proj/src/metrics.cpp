#include "bevgrid/metrics.hpp"

#include <cmath>
#include <string>

namespace bevgrid {

void ConfusionMatrix::add(ClassId gt, ClassId pred) {
  if (!is_valid_label(gt) || !is_valid_label(pred)) {
    throw Error("label out of range: gt " + std::to_string(gt) + ", pred " +
                std::to_string(pred));
  }
  if (gt == kUnlabeled) {
    ++excluded_gt_;
  } else if (pred == kUnlabeled) {
    ++excluded_pred_;
  } else {
    ++counts_[gt * kNumClasses + pred];
  }
}

void ConfusionMatrix::accumulate(std::span<const ClassId> gt, std::span<const ClassId> pred) {
  if (gt.size() != pred.size()) {
    throw Error("label count mismatch: ground truth has " + std::to_string(gt.size()) +
                ", prediction has " + std::to_string(pred.size()));
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!is_valid_label(gt[i]) || !is_valid_label(pred[i])) {
      throw Error("label out of range at position " + std::to_string(i) + ": gt " +
                  std::to_string(gt[i]) + ", pred " + std::to_string(pred[i]));
    }
  }
  for (std::size_t i = 0; i < gt.size(); ++i) add(gt[i], pred[i]);
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  excluded_gt_ += other.excluded_gt_;
  excluded_pred_ += other.excluded_pred_;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int c) const {
  std::uint64_t s = 0;
  for (int p = 0; p < kNumClasses; ++p) s += at(c, p);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(int c) const {
  std::uint64_t s = 0;
  for (int g = 0; g < kNumClasses; ++g) s += at(g, c);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (int c = 0; c < kNumClasses; ++c) s += at(c, c);
  return s;
}

MetricsSummary summarize(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error("cannot summarize an empty confusion matrix");

  MetricsSummary s;
  s.evaluated = total;
  s.excluded_unlabeled_gt = cm.excluded_unlabeled_gt();
  s.excluded_no_prediction = cm.excluded_no_prediction();
  s.oa = static_cast<double>(cm.trace()) / static_cast<double>(total);

  double recall_sum = 0.0;
  int recall_n = 0;
  double iou_sum = 0.0;
  int iou_n = 0;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto tp = static_cast<double>(cm.at(c, c));
    const std::uint64_t row = cm.row_sum(c);
    const std::uint64_t col = cm.col_sum(c);
    if (row > 0) {
      s.recall[c] = tp / static_cast<double>(row);
      recall_sum += *s.recall[c];
      ++recall_n;
    }
    if (row > 0 || col > 0) {
      s.iou[c] = tp / (static_cast<double>(row) + static_cast<double>(col) - tp);
      iou_sum += *s.iou[c];
      ++iou_n;
    }
  }
  s.macc = recall_n ? recall_sum / recall_n : 0.0;
  s.miou = iou_n ? iou_sum / iou_n : 0.0;
  return s;
}

std::array<double, kNumClasses> class_weights(std::span<const std::uint64_t> histogram,
                                              double offset) {
  if (histogram.size() != kNumClasses) {
    throw Error("class histogram must have " + std::to_string(kNumClasses) + " entries, got " +
                std::to_string(histogram.size()));
  }
  if (!(offset > 1.0)) throw ConfigError("weight offset must exceed 1");
  double total = 0.0;
  for (auto c : histogram) total += static_cast<double>(c);
  if (total == 0.0) throw Error("cannot derive class weights from an all-zero histogram");

  std::array<double, kNumClasses> w{};
  for (int c = 0; c < kNumClasses; ++c) {
    const double f = static_cast<double>(histogram[c]) / total;
    w[c] = 1.0 / std::log(offset + f);
  }
  return w;
}

std::array<std::uint64_t, kNumClasses> class_histogram(std::span<const ClassId> labels) {
  std::array<std::uint64_t, kNumClasses> h{};
  for (ClassId l : labels) {
    if (is_class_id(l)) ++h[l];
  }
  return h;
}

}  // namespace bevgrid
