#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "lh/eval.hpp"
#include "lh/synth.hpp"
#include "support.hpp"

namespace lh {
namespace {

using test::Rng;

const GridMeta kUnit{{1, 1, 1}, {1.0, 1.0, 1.0}};

MaskVolume slab_mask(std::int64_t nx, std::int64_t ny, std::int64_t nz) {
  return MaskVolume(GridMeta{{nx, ny, nz}, {1.0, 1.0, 1.0}}, 1);
}

// Zone of each slice read back from the region map (-1 when the slice is empty).
std::vector<int> zones_by_slice(const SextantMap& s) {
  const auto& m = s.region.meta();
  std::vector<int> out(static_cast<std::size_t>(m.nz()), -1);
  for (std::size_t i = 0; i < s.region.size(); ++i) {
    if (s.region[i] == kOutsideSextant) continue;
    const auto z = static_cast<std::size_t>(m.coords(i)[2]);
    const int zone = s.region[i] % 3;
    EXPECT_TRUE(out[z] == -1 || out[z] == zone) << "slice " << z << " split across zones";
    out[z] = zone;
  }
  return out;
}

TEST(Sextants, Names) {
  EXPECT_EQ(sextant_name(sextant_id(0, 0)), "left_base");
  EXPECT_EQ(sextant_name(sextant_id(1, 2)), "right_apex");
  EXPECT_EQ(sextant_name(kOutsideSextant), "outside");
}

TEST(Sextants, TwelveSlicesSplitEvenly) {
  const auto s = partition_sextants(slab_mask(4, 2, 12));
  EXPECT_EQ(s.zone_slices, (std::array<std::int64_t, 3>{4, 4, 4}));
  EXPECT_DOUBLE_EQ(s.centroid_x, 1.5);
  const auto zones = zones_by_slice(s);
  EXPECT_EQ(zones, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}));
  EXPECT_EQ(s.region.at(1, 0, 0), sextant_id(0, 0));
  EXPECT_EQ(s.region.at(2, 0, 0), sextant_id(1, 0));
}

TEST(Sextants, ExtraSlicesGoToBaseThenMid) {
  EXPECT_EQ(partition_sextants(slab_mask(2, 1, 7)).zone_slices, (std::array<std::int64_t, 3>{3, 2, 2}));
  EXPECT_EQ(partition_sextants(slab_mask(2, 1, 8)).zone_slices, (std::array<std::int64_t, 3>{3, 3, 2}));
  EXPECT_EQ(partition_sextants(slab_mask(2, 1, 2)).zone_slices, (std::array<std::int64_t, 3>{1, 1, 0}));
}

TEST(Sextants, EmptySlicesAreSkipped) {
  MaskVolume mask(GridMeta{{2, 1, 9}, {1.0, 1.0, 1.0}});
  for (std::int64_t z : {1, 2, 5, 6, 8, 7}) {
    mask.at(0, 0, z) = 1;
    mask.at(1, 0, z) = 1;
  }
  const auto zones = zones_by_slice(partition_sextants(mask));
  EXPECT_EQ(zones, (std::vector<int>{-1, 0, 0, -1, -1, 1, 1, 2, 2}));
}

TEST(Sextants, EmptyMaskThrows) {
  try {
    (void)partition_sextants(MaskVolume(kUnit));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyMask);
  }
}

TEST(Sextants, PartitionPropertiesOnRandomBlobs) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto mask = test::random_blob(rng, 6);
    const auto s = partition_sextants(mask);
    const auto& m = mask.meta();
    double sx = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask[i]) {
        sx += static_cast<double>(m.coords(i)[0]);
        ++n;
      }
    }
    const double cx = sx / static_cast<double>(n);
    std::array<std::size_t, kNumSextants> counts{};
    for (std::size_t i = 0; i < mask.size(); ++i) {
      const auto r = s.region[i];
      ASSERT_EQ(mask[i] != 0, r != kOutsideSextant);
      if (!mask[i]) continue;
      ASSERT_LT(r, kNumSextants);
      ASSERT_EQ(r / 3, static_cast<double>(m.coords(i)[0]) < cx ? 0 : 1);
      ++counts[r];
    }
    for (auto c : counts) EXPECT_GT(c, 0u) << "trial " << trial;
    const auto [lo, hi] = std::minmax_element(s.zone_slices.begin(), s.zone_slices.end());
    EXPECT_LE(*hi - *lo, 1);
    // Zones are contiguous and ordered along z.
    int last = -1;
    for (int z : zones_by_slice(s)) {
      if (z < 0) continue;
      EXPECT_GE(z, last);
      last = z;
    }
  }
}

TEST(Dice, Examples) {
  const GridMeta m{{4, 1, 1}, {1.0, 1.0, 1.0}};
  const MaskVolume a(m, std::vector<std::uint8_t>{1, 1, 0, 0});
  const MaskVolume b(m, std::vector<std::uint8_t>{0, 1, 1, 0});
  const MaskVolume c(m, std::vector<std::uint8_t>{0, 0, 1, 1});
  const MaskVolume empty(m);
  EXPECT_DOUBLE_EQ(pixel_dice(a, b), 0.5);
  EXPECT_DOUBLE_EQ(pixel_dice(a, a), 1.0);
  EXPECT_DOUBLE_EQ(pixel_dice(a, c), 0.0);
  EXPECT_DOUBLE_EQ(pixel_dice(empty, empty), 1.0);
  EXPECT_DOUBLE_EQ(pixel_dice(a, empty), 0.0);
}

TEST(Dice, RandomIdentities) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = test::random_meta(rng, 10);
    const auto a = test::random_mask(rng, m, 0.4);
    const auto b = test::random_mask(rng, m, 0.4);
    EXPECT_DOUBLE_EQ(pixel_dice(a, a), 1.0);
    EXPECT_DOUBLE_EQ(pixel_dice(a, b), pixel_dice(b, a));
    MaskVolume comp(m);
    for (std::size_t i = 0; i < a.size(); ++i) comp[i] = a[i] ? 0 : 1;
    if (count_foreground(a) + count_foreground(comp) > 0) EXPECT_DOUBLE_EQ(pixel_dice(a, comp), 0.0);
    const double d = pixel_dice(a, b);
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

// 2x1x6 prostate, one indolent lesion covering x = 0 on the first two slices.
struct SmallCase {
  MaskVolume mask{GridMeta{{2, 1, 6}, {1.0, 1.0, 1.0}}, 1};
  LesionSet lesions;
  SextantMap sextants;

  SmallCase() {
    Lesion l;
    l.voxel_ids = {mask.meta().linear(0, 0, 0), mask.meta().linear(0, 0, 1)};
    l.volume_mm3 = 2.0;
    l.grade = LesionGrade::Indolent;
    lesions.meta = mask.meta();
    lesions.lesions.push_back(l);
    sextants = partition_sextants(mask);
  }
};

TEST(Units, OnePositiveFiveNegatives) {
  SmallCase c;
  ProbVolume probs(c.mask.meta(), ClassProbs{1.0f, 0.0f, 0.0f});
  probs.at(0, 0, 1) = {0.2f, 0.7f, 0.1f};
  probs.at(1, 0, 5) = {0.6f, 0.1f, 0.3f};
  const auto units = build_eval_units(c.lesions, ClassGroup::CancerVsAll, c.sextants, probs);
  ASSERT_EQ(units.size(), 6u);
  EXPECT_TRUE(units[0].truth);
  EXPECT_EQ(units[0].kind, UnitKind::GtLesion);
  EXPECT_NEAR(units[0].score, 0.8, 1e-6);
  std::size_t negatives = 0;
  double best_negative = 0.0;
  for (const auto& u : units) {
    if (u.truth) continue;
    ++negatives;
    EXPECT_EQ(u.kind, UnitKind::CancerFreeSextant);
    best_negative = std::max(best_negative, u.score);
  }
  EXPECT_EQ(negatives, 5u);
  EXPECT_NEAR(best_negative, 0.4, 1e-6);
}

TEST(Units, OutOfGroupLesionDoesNotBlockSextants) {
  SmallCase c;
  ProbVolume probs(c.mask.meta(), ClassProbs{1.0f, 0.0f, 0.0f});
  const auto units = build_eval_units(c.lesions, ClassGroup::AggressiveVsAll, c.sextants, probs);
  ASSERT_EQ(units.size(), 6u);
  for (const auto& u : units) EXPECT_FALSE(u.truth);
  EXPECT_FALSE(lesion_roc_auc(units).has_value());
}

TEST(Units, OverlapScoresAreFractions) {
  SmallCase c;
  MaskVolume other(c.mask.meta());
  other.at(0, 0, 0) = 1;
  const auto units = build_overlap_units(c.lesions, ClassGroup::CancerVsAll, c.sextants, other);
  ASSERT_FALSE(units.empty());
  EXPECT_DOUBLE_EQ(units[0].score, 0.5);
}

std::vector<EvalUnit> random_units(Rng& rng, int n, int levels) {
  std::vector<EvalUnit> units(static_cast<std::size_t>(n));
  for (auto& u : units) {
    u.truth = test::uniform_int(rng, 0, 1) == 1;
    u.score = levels > 0 ? test::uniform_int(rng, 0, levels) / static_cast<double>(levels)
                         : test::uniform_real(rng, 0.0, 1.0);
  }
  return units;
}

TEST(Auc, MatchesPairwiseOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto units = random_units(rng, test::uniform_int(rng, 0, 30), trial % 2 ? 4 : 0);
    const auto got = lesion_roc_auc(units);
    const auto want = test::auc_oracle(units);
    ASSERT_EQ(got.has_value(), want.has_value());
    if (got) EXPECT_NEAR(*got, *want, 1e-12);
  }
}

TEST(Auc, TiesAndDegenerateCases) {
  std::vector<EvalUnit> units(6);
  for (std::size_t i = 0; i < units.size(); ++i) {
    units[i].truth = i < 2;
    units[i].score = 0.3;
  }
  EXPECT_DOUBLE_EQ(*lesion_roc_auc(units), 0.5);
  for (auto& u : units) u.truth = true;
  EXPECT_FALSE(lesion_roc_auc(units).has_value());
  for (auto& u : units) u.truth = false;
  EXPECT_FALSE(lesion_roc_auc(units).has_value());
  EXPECT_FALSE(lesion_roc_auc({}).has_value());
}

TEST(Auc, PerfectAndInverted) {
  std::vector<EvalUnit> units(4);
  units[0] = {UnitKind::GtLesion, {}, true, 0.9};
  units[1] = {UnitKind::GtLesion, {}, true, 0.8};
  units[2] = {UnitKind::CancerFreeSextant, {}, false, 0.1};
  units[3] = {UnitKind::CancerFreeSextant, {}, false, 0.2};
  EXPECT_DOUBLE_EQ(*lesion_roc_auc(units), 1.0);
  for (auto& u : units) u.score = 1.0 - u.score;
  EXPECT_DOUBLE_EQ(*lesion_roc_auc(units), 0.0);
}

TEST(Auc, InvariantUnderIncreasingMap) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto units = random_units(rng, 20, trial % 2 ? 5 : 0);
    const auto before = lesion_roc_auc(units);
    for (auto& u : units) u.score = u.score * u.score;
    const auto after = lesion_roc_auc(units);
    ASSERT_EQ(before.has_value(), after.has_value());
    if (before) EXPECT_DOUBLE_EQ(*before, *after);
  }
}

TEST(Confusion, CountsAndRates) {
  std::vector<EvalUnit> units = {
      {UnitKind::GtLesion, {}, true, 0.9},          {UnitKind::GtLesion, {}, true, 0.5},
      {UnitKind::GtLesion, {}, true, 0.1},          {UnitKind::CancerFreeSextant, {}, false, 0.6},
      {UnitKind::CancerFreeSextant, {}, false, 0.2},
  };
  const auto c = lesion_confusion(units);
  EXPECT_EQ(c, (ConfusionCounts{2, 1, 1, 1}));
  const auto ss = sensitivity_specificity(c);
  EXPECT_NEAR(*ss.sensitivity, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(*ss.specificity, 0.5);
  const auto none = sensitivity_specificity(ConfusionCounts{});
  EXPECT_FALSE(none.sensitivity.has_value());
  EXPECT_FALSE(none.specificity.has_value());
}

TEST(Confusion, ThresholdMonotone) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto units = random_units(rng, 25, 0);
    std::size_t last_tp = units.size() + 1, last_tn = 0;
    for (double t = 0.0; t <= 1.0001; t += 0.05) {
      const auto c = lesion_confusion(units, t);
      EXPECT_LE(c.tp, last_tp);
      EXPECT_GE(c.tn, last_tn);
      EXPECT_EQ(c.tp + c.fn + c.fp + c.tn, units.size());
      last_tp = c.tp;
      last_tn = c.tn;
    }
  }
}

PatientCase phantom_case(std::size_t index) {
  PhantomSpec spec;
  auto p = generate_phantom(spec, index);
  p.set_label(LabelSource::DPathLesion, derive_dpath_lesion(p));
  return p;
}

TEST(Concordance, SelfIsPerfect) {
  const auto p = phantom_case(0);
  const auto& truth = p.label(LabelSource::DPathLesion);
  const auto lesions = extract_lesions(truth, ClassGroup::CancerVsAll);
  const auto s = partition_sextants(p.mask());
  const auto r = concordance(truth, lesions, truth, ClassGroup::CancerVsAll, s);
  EXPECT_DOUBLE_EQ(r.dice, 1.0);
  ASSERT_TRUE(r.lesion_auc.has_value());
  EXPECT_DOUBLE_EQ(*r.lesion_auc, 1.0);
}

TEST(Concordance, EmptyComparator) {
  const auto p = phantom_case(1);
  const auto& truth = p.label(LabelSource::DPathLesion);
  const auto lesions = extract_lesions(truth, ClassGroup::CancerVsAll);
  const auto s = partition_sextants(p.mask());
  const LabelVolume blank(p.meta(), ClassId::Normal);
  const auto r = concordance(truth, lesions, blank, ClassGroup::CancerVsAll, s);
  EXPECT_DOUBLE_EQ(r.dice, 0.0);
  if (r.lesion_auc) EXPECT_DOUBLE_EQ(*r.lesion_auc, 0.5);
}

TEST(EvaluatePatient, OraclePredictionsArePerfect) {
  for (std::size_t i = 0; i < 4; ++i) {
    const auto p = phantom_case(i);
    const auto oracle = one_hot(p.label(LabelSource::DPathLesion));
    for (auto g : kAllGroups) {
      const auto row = evaluate_patient(p, LabelSource::DPathLesion, oracle, g);
      EXPECT_EQ(row.patient_id, p.id());
      EXPECT_DOUBLE_EQ(*row.dice, 1.0);
      if (row.n_positive > 0) EXPECT_DOUBLE_EQ(*row.sensitivity, 1.0);
      if (row.n_negative > 0) EXPECT_DOUBLE_EQ(*row.specificity, 1.0);
      if (row.auc) EXPECT_DOUBLE_EQ(*row.auc, 1.0);
    }
  }
}

TEST(EvaluatePatient, AllNormalPredictions) {
  const auto p = phantom_case(2);
  const ProbVolume normal(p.meta(), ClassProbs{1.0f, 0.0f, 0.0f});
  const auto row = evaluate_patient(p, LabelSource::DPathLesion, normal, ClassGroup::CancerVsAll);
  ASSERT_GT(row.n_positive, 0u);
  EXPECT_DOUBLE_EQ(*row.sensitivity, 0.0);
  if (row.n_negative > 0) EXPECT_DOUBLE_EQ(*row.specificity, 1.0);
  EXPECT_EQ(row.counts.tp + row.counts.fn, row.n_positive);
}

TEST(EvaluatePatient, MatchesHandBuiltUnits) {
  const auto p = phantom_case(3);
  Rng rng(13);
  ProbVolume probs(p.meta());
  for (auto& v : probs.voxels()) {
    const float a = static_cast<float>(test::uniform_real(rng, 0, 1));
    const float b = static_cast<float>(test::uniform_real(rng, 0, 1 - a));
    v = {1.0f - a - b, a, b};
  }
  const auto& truth = p.label(LabelSource::DPathLesion);
  for (auto g : kAllGroups) {
    const auto row = evaluate_patient(p, LabelSource::DPathLesion, probs, g);
    const auto lesions = extract_lesions(truth, g);
    const auto units = build_eval_units(lesions, g, partition_sextants(p.mask()), probs);
    const auto want = test::auc_oracle(units);
    ASSERT_EQ(row.auc.has_value(), want.has_value());
    if (want) EXPECT_NEAR(*row.auc, *want, 1e-12);
    EXPECT_EQ(row.counts, lesion_confusion(units));
  }
}

TEST(Aggregate, MeanAndSampleStd) {
  std::vector<MetricsRow> rows(2);
  rows[0].patient_id = "b";
  rows[0].dice = 0.4;
  rows[1].patient_id = "a";
  rows[1].dice = 0.2;
  const auto r = aggregate(rows);
  ASSERT_EQ(r.summary.size(), 1u);
  EXPECT_EQ(r.rows[0].patient_id, "a");
  EXPECT_NEAR(*r.summary[0].dice.mean, 0.3, 1e-15);
  EXPECT_NEAR(*r.summary[0].dice.stddev, 0.1414213562373095, 1e-12);
  EXPECT_EQ(r.summary[0].auc.n_undefined, 2u);
  EXPECT_FALSE(r.summary[0].auc.mean.has_value());
  EXPECT_EQ(format_mean_std(r.summary[0].auc), "NA");
  EXPECT_EQ(format_mean_std(r.summary[0].dice), "0.3 +/- 0.141421");
}

TEST(Aggregate, SingleValueHasZeroStd) {
  const std::vector<std::optional<double>> v{0.7, std::nullopt};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(*s.mean, 0.7);
  EXPECT_DOUBLE_EQ(*s.stddev, 0.0);
  EXPECT_EQ(s.n_defined, 1u);
  EXPECT_EQ(s.n_undefined, 1u);
}

TEST(Aggregate, OrderIndependent) {
  Rng rng(17);
  std::vector<MetricsRow> rows;
  for (int i = 0; i < 12; ++i) {
    MetricsRow r;
    r.patient_id = patient_id(static_cast<std::size_t>(i / 3));
    r.group = kAllGroups[static_cast<std::size_t>(i % 3)];
    r.dice = test::uniform_real(rng, 0, 1);
    rows.push_back(r);
  }
  auto shuffled = rows;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::ostringstream a, b;
  write_metrics_csv_rows(a, "t", "p", aggregate(rows));
  write_metrics_csv_rows(b, "t", "p", aggregate(shuffled));
  EXPECT_EQ(a.str(), b.str());
  const auto r = aggregate(rows);
  EXPECT_EQ(r.summary.size(), 3u);
  EXPECT_EQ(r.summary[0].group, ClassGroup::CancerVsAll);
}

TEST(Aggregate, EmptyCohortThrows) {
  try {
    (void)aggregate({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCohort);
  }
}

TEST(MetricsCsv, Schema) {
  MetricsRow row;
  row.patient_id = "case_0000";
  row.dice = 2.0 / 3.0;
  row.counts = {1, 0, 5, 0};
  row.sensitivity = 1.0;
  row.specificity = 1.0;
  row.n_positive = 1;
  row.n_negative = 5;
  std::ostringstream out;
  write_metrics_csv_header(out);
  write_metrics_csv_rows(out, "dpath_lesion", "sim", aggregate({row}));
  EXPECT_EQ(out.str(),
            "truth,pred,patient_id,group,dice,auc,sensitivity,specificity,tp,fp,tn,fn,n_pos,n_neg\n"
            "dpath_lesion,sim,case_0000," +
                std::string(to_string(ClassGroup::CancerVsAll)) + ",0.666667,NA,1,1,1,0,5,0,1,5\n");
}

}  // namespace
}  // namespace lh
