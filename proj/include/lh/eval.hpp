#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lh/lesions.hpp"

namespace lh {

// Region ids are side * 3 + zone with side 0 = left, 1 = right and
// zone 0 = base, 1 = mid, 2 = apex.
inline constexpr std::uint8_t kOutsideSextant = 255;
inline constexpr int kNumSextants = 6;

[[nodiscard]] constexpr std::uint8_t sextant_id(int side, int zone) noexcept {
  return static_cast<std::uint8_t>(side * 3 + zone);
}
[[nodiscard]] std::string sextant_name(std::uint8_t id);

struct SextantMap {
  Volume<std::uint8_t> region;
  double centroid_x = 0.0;
  std::array<std::int64_t, 3> zone_slices{0, 0, 0};
};

/// Left/right split at the mask x-centroid (x < c is left). Slices holding
/// mask voxels are cut into three contiguous runs, base first, whose sizes
/// differ by at most one with the extra slices going to base then mid.
[[nodiscard]] SextantMap partition_sextants(const MaskVolume& mask);

/// 2|A∩B| / (|A|+|B|), 1.0 when both are empty.
[[nodiscard]] double pixel_dice(const MaskVolume& truth, const MaskVolume& pred);

enum class UnitKind { GtLesion, CancerFreeSextant };

struct EvalUnit {
  UnitKind kind = UnitKind::GtLesion;
  std::vector<std::size_t> voxel_ids;
  bool truth = true;
  double score = 0.0;
};

/// Positive units are ground-truth lesions graded into the group; negative
/// units are sextants holding none of their voxels. The unit score is the
/// largest per-voxel summed probability of the group's classes.
[[nodiscard]] std::vector<EvalUnit> build_eval_units(const LesionSet& gt_lesions, ClassGroup group,
                                                     const SextantMap& sextants, const ProbVolume& probs);

/// Same units scored by the fraction of each unit's voxels marked in `other`.
[[nodiscard]] std::vector<EvalUnit> build_overlap_units(const LesionSet& gt_lesions, ClassGroup group,
                                                        const SextantMap& sextants, const MaskVolume& other);

/// Mann–Whitney AUC over (positive, negative) pairs, ties counting one half.
/// Empty when either class is absent.
[[nodiscard]] std::optional<double> lesion_roc_auc(std::span<const EvalUnit> units);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool operator==(const ConfusionCounts&) const = default;
};

inline constexpr double kDefaultScoreThreshold = 0.5;

[[nodiscard]] ConfusionCounts lesion_confusion(std::span<const EvalUnit> units,
                                               double threshold = kDefaultScoreThreshold);

struct SensSpec {
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

/// TP/(TP+FN) and TN/(TN+FP).
[[nodiscard]] SensSpec sensitivity_specificity(const ConfusionCounts& c);

struct ConcordanceResult {
  double dice = 0.0;
  std::optional<double> lesion_auc;
};

[[nodiscard]] ConcordanceResult concordance(const LabelVolume& truth, const LesionSet& truth_lesions,
                                            const LabelVolume& other, ClassGroup group,
                                            const SextantMap& sextants);

struct EvalParams {
  LesionParams lesion;
  double score_threshold = kDefaultScoreThreshold;
};

struct MetricsRow {
  std::string patient_id;
  ClassGroup group = ClassGroup::CancerVsAll;
  std::optional<double> dice;
  std::optional<double> auc;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  ConfusionCounts counts;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
};

/// Lesions from the truth source, sextants from the case mask, units scored
/// by `pred`; Dice compares the group-binarized truth with argmax(pred).
[[nodiscard]] MetricsRow evaluate_patient(const PatientCase& patient, LabelSource truth_source,
                                          const ProbVolume& pred, ClassGroup group, const EvalParams& params = {});

struct MetricStat {
  std::optional<double> mean;
  std::optional<double> stddev;  // sample (n - 1); 0 when n == 1
  std::size_t n_defined = 0;
  std::size_t n_undefined = 0;
};

[[nodiscard]] MetricStat summarize(std::span<const std::optional<double>> values);

struct GroupSummary {
  ClassGroup group = ClassGroup::CancerVsAll;
  MetricStat dice, auc, sensitivity, specificity;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;        // sorted by (patient_id, group)
  std::vector<GroupSummary> summary;  // one per group present, in enum order
};

/// Sorts rows by patient id before reducing so results do not depend on
/// the order rows were produced in.
[[nodiscard]] MetricsReport aggregate(std::vector<MetricsRow> rows);

/// truth,pred,patient_id,group,dice,auc,sensitivity,specificity,tp,fp,tn,fn,n_pos,n_neg
void write_metrics_csv_header(std::ostream& out);
void write_metrics_csv_rows(std::ostream& out, std::string_view truth, std::string_view pred,
                            const MetricsReport& report);

[[nodiscard]] std::string format_mean_std(const MetricStat& s);

}  // namespace lh
