#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "bevgrid/point.hpp"

namespace bevgrid {

/// 13x13 count table, rows = ground truth, columns = prediction. Pairs that
/// involve label 255 on either side are tallied separately and never enter
/// the matrix.
class ConfusionMatrix {
 public:
  void accumulate(std::span<const ClassId> gt, std::span<const ClassId> pred);
  void add(ClassId gt, ClassId pred);
  void merge(const ConfusionMatrix& other);

  std::uint64_t at(int gt, int pred) const { return counts_[gt * kNumClasses + pred]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(int c) const;
  std::uint64_t col_sum(int c) const;
  std::uint64_t trace() const;

  std::uint64_t excluded_unlabeled_gt() const { return excluded_gt_; }
  std::uint64_t excluded_no_prediction() const { return excluded_pred_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::array<std::uint64_t, kNumClasses * kNumClasses> counts_{};
  std::uint64_t excluded_gt_ = 0;    // gt == 255
  std::uint64_t excluded_pred_ = 0;  // gt labeled, pred == 255
};

struct MetricsSummary {
  double oa = 0.0;
  double macc = 0.0;
  double miou = 0.0;
  std::array<std::optional<double>, kNumClasses> recall{};  // nullopt when the class has no gt
  std::array<std::optional<double>, kNumClasses> iou{};     // nullopt when absent from gt and pred
  std::uint64_t evaluated = 0;
  std::uint64_t excluded_unlabeled_gt = 0;
  std::uint64_t excluded_no_prediction = 0;

  friend bool operator==(const MetricsSummary&, const MetricsSummary&) = default;
};

/// OA = trace / total; mAcc = mean recall over classes present in gt;
/// IoU_c = tp / (row + col - tp), averaged over classes present in gt or pred.
MetricsSummary summarize(const ConfusionMatrix& cm);

inline constexpr double kDefaultWeightOffset = 1.02;

/// Log-inverse class weights w_c = 1 / ln(offset + count_c / total).
std::array<double, kNumClasses> class_weights(std::span<const std::uint64_t> histogram,
                                              double offset = kDefaultWeightOffset);

std::array<std::uint64_t, kNumClasses> class_histogram(std::span<const ClassId> labels);

}  // namespace bevgrid
