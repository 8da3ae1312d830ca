#include "lh/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "lh/text.hpp"

namespace lh {

std::string sextant_name(std::uint8_t id) {
  static constexpr std::array<std::string_view, 2> sides{"left", "right"};
  static constexpr std::array<std::string_view, 3> zones{"base", "mid", "apex"};
  if (id >= kNumSextants) return "outside";
  return std::string(sides[id / 3]) + "_" + std::string(zones[id % 3]);
}

SextantMap partition_sextants(const MaskVolume& mask) {
  const auto& m = mask.meta();
  double sum_x = 0.0;
  std::size_t n = 0;
  std::vector<std::uint8_t> slice_used(static_cast<std::size_t>(m.nz()), 0);
  for (std::int64_t z = 0; z < m.nz(); ++z) {
    for (std::int64_t y = 0; y < m.ny(); ++y) {
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        if (!mask.at(x, y, z)) continue;
        sum_x += static_cast<double>(x);
        ++n;
        slice_used[static_cast<std::size_t>(z)] = 1;
      }
    }
  }
  if (n == 0) throw Error(ErrorKind::EmptyMask, "cannot split an empty mask into sextants");

  SextantMap out{Volume<std::uint8_t>(m, kOutsideSextant), sum_x / static_cast<double>(n), {0, 0, 0}};

  std::vector<std::int64_t> slices;
  for (std::int64_t z = 0; z < m.nz(); ++z) {
    if (slice_used[static_cast<std::size_t>(z)]) slices.push_back(z);
  }
  const auto total = static_cast<std::int64_t>(slices.size());
  const auto q = total / 3, r = total % 3;
  out.zone_slices = {q + (r >= 1 ? 1 : 0), q + (r >= 2 ? 1 : 0), q};

  std::vector<int> zone_of(static_cast<std::size_t>(m.nz()), -1);
  std::int64_t k = 0;
  for (int zone = 0; zone < 3; ++zone) {
    for (std::int64_t i = 0; i < out.zone_slices[zone]; ++i, ++k) {
      zone_of[static_cast<std::size_t>(slices[static_cast<std::size_t>(k)])] = zone;
    }
  }

  for (std::int64_t z = 0; z < m.nz(); ++z) {
    for (std::int64_t y = 0; y < m.ny(); ++y) {
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        if (!mask.at(x, y, z)) continue;
        const int side = static_cast<double>(x) < out.centroid_x ? 0 : 1;
        out.region.at(x, y, z) = sextant_id(side, zone_of[static_cast<std::size_t>(z)]);
      }
    }
  }
  return out;
}

double pixel_dice(const MaskVolume& truth, const MaskVolume& pred) {
  require_same_meta(truth.meta(), pred.meta(), "pixel_dice");
  std::size_t a = 0, b = 0, both = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] != 0, p = pred[i] != 0;
    a += t;
    b += p;
    both += t && p;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

namespace {

template <typename ScoreFn>
std::vector<EvalUnit> build_units(const LesionSet& gt_lesions, ClassGroup group, const SextantMap& sextants,
                                  ScoreFn&& score) {
  const auto& meta = sextants.region.meta();
  require_same_meta(gt_lesions.meta, meta, "build_eval_units");

  std::vector<EvalUnit> units;
  std::vector<std::uint8_t> in_lesion(meta.voxel_count(), 0);
  for (const auto& lesion : gt_lesions.lesions) {
    if (!in_group(lesion.grade, group) || lesion.voxel_ids.empty()) continue;
    for (auto v : lesion.voxel_ids) in_lesion[v] = 1;
    EvalUnit u{UnitKind::GtLesion, lesion.voxel_ids, true, 0.0};
    u.score = score(u.voxel_ids);
    units.push_back(std::move(u));
  }

  std::array<std::vector<std::size_t>, kNumSextants> regions;
  std::array<bool, kNumSextants> touched{};
  for (std::size_t i = 0; i < sextants.region.size(); ++i) {
    const auto id = sextants.region[i];
    if (id >= kNumSextants) continue;
    regions[id].push_back(i);
    if (in_lesion[i]) touched[id] = true;
  }
  for (int s = 0; s < kNumSextants; ++s) {
    if (touched[s] || regions[s].empty()) continue;
    EvalUnit u{UnitKind::CancerFreeSextant, std::move(regions[s]), false, 0.0};
    u.score = score(u.voxel_ids);
    units.push_back(std::move(u));
  }
  return units;
}

}  // namespace

std::vector<EvalUnit> build_eval_units(const LesionSet& gt_lesions, ClassGroup group, const SextantMap& sextants,
                                       const ProbVolume& probs) {
  require_same_meta(probs.meta(), sextants.region.meta(), "build_eval_units");
  const bool use_ind = in_group(ClassId::Indolent, group);
  const bool use_agg = in_group(ClassId::Aggressive, group);
  return build_units(gt_lesions, group, sextants, [&](const std::vector<std::size_t>& voxels) {
    double best = 0.0;
    for (auto v : voxels) {
      const auto& p = probs[v];
      const double s = (use_ind ? double{p[1]} : 0.0) + (use_agg ? double{p[2]} : 0.0);
      best = std::max(best, s);
    }
    return std::min(best, 1.0);
  });
}

std::vector<EvalUnit> build_overlap_units(const LesionSet& gt_lesions, ClassGroup group,
                                          const SextantMap& sextants, const MaskVolume& other) {
  require_same_meta(other.meta(), sextants.region.meta(), "build_overlap_units");
  return build_units(gt_lesions, group, sextants, [&](const std::vector<std::size_t>& voxels) {
    std::size_t hit = 0;
    for (auto v : voxels) hit += other[v] != 0;
    return static_cast<double>(hit) / static_cast<double>(voxels.size());
  });
}

std::optional<double> lesion_roc_auc(std::span<const EvalUnit> units) {
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(units.size());
  std::size_t n_pos = 0;
  for (const auto& u : units) {
    scored.emplace_back(u.score, u.truth);
    n_pos += u.truth;
  }
  const auto n_neg = scored.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Midranks (1-based, doubled to stay integral).
  std::size_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const std::size_t twice_mid = (i + 1) + j;
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second) rank_sum_x2 += twice_mid;
    }
    i = j;
  }
  const auto u_x2 = static_cast<double>(rank_sum_x2) - static_cast<double>(n_pos * (n_pos + 1));
  return u_x2 / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

ConfusionCounts lesion_confusion(std::span<const EvalUnit> units, double threshold) {
  ConfusionCounts c;
  for (const auto& u : units) {
    const bool flagged = u.score >= threshold;
    if (u.truth) {
      (flagged ? c.tp : c.fn) += 1;
    } else {
      (flagged ? c.fp : c.tn) += 1;
    }
  }
  return c;
}

SensSpec sensitivity_specificity(const ConfusionCounts& c) {
  SensSpec out;
  if (c.tp + c.fn > 0) out.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0) out.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  return out;
}

ConcordanceResult concordance(const LabelVolume& truth, const LesionSet& truth_lesions, const LabelVolume& other,
                              ClassGroup group, const SextantMap& sextants) {
  require_same_meta(truth.meta(), other.meta(), "concordance");
  const auto other_mask = binarize(other, group);
  ConcordanceResult r;
  r.dice = pixel_dice(binarize(truth, group), other_mask);
  r.lesion_auc = lesion_roc_auc(build_overlap_units(truth_lesions, group, sextants, other_mask));
  return r;
}

MetricsRow evaluate_patient(const PatientCase& patient, LabelSource truth_source, const ProbVolume& pred,
                            ClassGroup group, const EvalParams& params) {
  const auto& truth = patient.label(truth_source);
  require_same_meta(truth.meta(), pred.meta(), "evaluate_patient");
  const auto lesions = extract_lesions(truth, group, params.lesion);
  const auto sextants = partition_sextants(patient.mask());
  const auto units = build_eval_units(lesions, group, sextants, pred);

  MetricsRow row;
  row.patient_id = patient.id();
  row.group = group;
  row.dice = pixel_dice(binarize(truth, group), binarize(argmax_labels(pred), group));
  row.auc = lesion_roc_auc(units);
  row.counts = lesion_confusion(units, params.score_threshold);
  const auto ss = sensitivity_specificity(row.counts);
  row.sensitivity = ss.sensitivity;
  row.specificity = ss.specificity;
  row.n_positive = row.counts.tp + row.counts.fn;
  row.n_negative = row.counts.tn + row.counts.fp;
  return row;
}

MetricStat summarize(std::span<const std::optional<double>> values) {
  MetricStat s;
  double sum = 0.0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++s.n_defined;
    } else {
      ++s.n_undefined;
    }
  }
  if (s.n_defined == 0) return s;
  const double mean = sum / static_cast<double>(s.n_defined);
  double ss = 0.0;
  for (const auto& v : values) {
    if (v) ss += (*v - mean) * (*v - mean);
  }
  s.mean = mean;
  s.stddev = s.n_defined > 1 ? std::sqrt(ss / static_cast<double>(s.n_defined - 1)) : 0.0;
  return s;
}

MetricsReport aggregate(std::vector<MetricsRow> rows) {
  if (rows.empty()) throw Error(ErrorKind::EmptyCohort, "no rows to aggregate");
  std::stable_sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    if (a.patient_id != b.patient_id) return a.patient_id < b.patient_id;
    return static_cast<int>(a.group) < static_cast<int>(b.group);
  });
  MetricsReport report;
  for (auto g : kAllGroups) {
    std::vector<std::optional<double>> dice, auc, sens, spec;
    for (const auto& r : rows) {
      if (r.group != g) continue;
      dice.push_back(r.dice);
      auc.push_back(r.auc);
      sens.push_back(r.sensitivity);
      spec.push_back(r.specificity);
    }
    if (dice.empty()) continue;
    report.summary.push_back({g, summarize(dice), summarize(auc), summarize(sens), summarize(spec)});
  }
  report.rows = std::move(rows);
  return report;
}

void write_metrics_csv_header(std::ostream& out) {
  out << "truth,pred,patient_id,group,dice,auc,sensitivity,specificity,tp,fp,tn,fn,n_pos,n_neg\n";
}

void write_metrics_csv_rows(std::ostream& out, std::string_view truth, std::string_view pred,
                            const MetricsReport& report) {
  for (const auto& r : report.rows) {
    out << truth << ',' << pred << ',' << r.patient_id << ',' << to_string(r.group) << ','
        << format_number(r.dice) << ',' << format_number(r.auc) << ',' << format_number(r.sensitivity) << ','
        << format_number(r.specificity) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ','
        << r.counts.fn << ',' << r.n_positive << ',' << r.n_negative << '\n';
  }
}

std::string format_mean_std(const MetricStat& s) {
  if (!s.mean) return "NA";
  return format_number(*s.mean) + " +/- " + format_number(*s.stddev);
}

}  // namespace lh
