// lesion_harness: batch front-end over the lh library.
//
// Every subcommand accepts --config FILE (`key = value`, keys are long option
// names with '-' or '_') and --jobs N (default $LESION_HARNESS_JOBS). Flags
// given on the command line win over the file. Each run leaves a manifest of
// the fully resolved configuration next to its output.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lh/cohort.hpp"
#include "lh/eval.hpp"
#include "lh/lesions.hpp"
#include "lh/parallel.hpp"
#include "lh/preprocess.hpp"
#include "lh/synth.hpp"
#include "lh/text.hpp"
#include "lh/vgrid.hpp"

namespace {

using namespace lh;
namespace fs = std::filesystem;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "key = value file; command-line flags take precedence")
      ->check(CLI::ExistingFile);
  sub->add_option("--jobs", c.jobs, "worker threads")->envname("LESION_HARNESS_JOBS")->check(CLI::PositiveNumber);
}

struct LesionOpts {
  int connectivity = 26;
  double min_volume = 250.0;
  double agg_threshold = kDefaultGradeThreshold;
  double ind_threshold = kDefaultGradeThreshold;
  std::vector<double> disk_radii{kDefaultDiskRadiiMm.begin(), kDefaultDiskRadiiMm.end()};

  [[nodiscard]] LesionParams params() const {
    LesionParams p;
    const auto c = parse_connectivity(connectivity);
    if (!c) throw UsageError("connectivity must be 6, 18 or 26");
    p.connectivity = *c;
    p.min_volume_mm3 = min_volume;
    p.agg_threshold = agg_threshold;
    p.ind_threshold = ind_threshold;
    std::copy(disk_radii.begin(), disk_radii.end(), p.radii_mm.begin());
    return p;
  }
};

void add_lesion_options(CLI::App* sub, LesionOpts& o) {
  sub->add_option("--connectivity", o.connectivity, "6, 18 or 26")->check(CLI::IsMember({6, 18, 26}));
  sub->add_option("--min-volume", o.min_volume, "smallest kept lesion, mm^3")->check(CLI::NonNegativeNumber);
  sub->add_option("--agg-threshold", o.agg_threshold, "aggressive fraction for an Aggressive grade")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--ind-threshold", o.ind_threshold, "indolent fraction for an Indolent grade")
      ->check(CLI::Range(0.0, 1.0));
  sub->add_option("--disk-radii", o.disk_radii, "closing disks for slices -1, 0, +1 (mm)")
      ->expected(3)
      ->check(CLI::NonNegativeNumber);
}

// ---------------------------------------------------------------------------
// Config file merge and resolved-config echo

std::string option_key(const CLI::Option* opt) { return opt->get_single_name(); }

void apply_config(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  for (const auto& [key, value] : read_key_value_file(path)) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = name == "config" || name == "help" ? nullptr : sub.get_option_no_throw("--" + name);
    if (opt == nullptr) throw UsageError("unknown config key '" + key + "' for " + sub.get_name());
    if (opt->count() > 0) continue;
    const auto tokens = split_ws(value);
    if (tokens.empty()) throw UsageError("config key '" + key + "' has no value");
    for (auto t : tokens) opt->add_result(std::string(t));
    opt->run_callback();
  }
}

std::string normalize_default(std::string s) {
  std::string out;
  for (char ch : s) {
    if (ch == '[' || ch == ']') continue;
    out += ch == ',' ? ' ' : ch;
  }
  return out;
}

/// Resolved options in declaration order. `jobs` never changes outputs and
/// is left out so manifests stay identical across worker counts.
KeyValues resolved_config(const CLI::App& sub) {
  KeyValues kv;
  kv.emplace_back("command", sub.get_name());
  for (const CLI::Option* opt : sub.get_options()) {
    const auto key = option_key(opt);
    if (key == "help" || key == "config" || key == "jobs") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = normalize_default(opt->get_default_str());
    }
    std::replace(value.begin(), value.end(), ',', ' ');
    kv.emplace_back(key, value);
  }
  return kv;
}

void write_manifest_file(const fs::path& path, const KeyValues& kv) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  write_text_file(path, text);
}

fs::path sidecar(const std::string& out, const char* suffix) { return fs::path(out + suffix); }

// ---------------------------------------------------------------------------
// Shared helpers

LabelSource source_arg(const std::string& s) {
  const auto v = parse_label_source(s);
  if (!v) throw UsageError("unknown label source '" + s + "' (rad, path, dpath_lesion, dpath_pixel)");
  return *v;
}

ClassGroup group_arg(const std::string& s) {
  const auto v = parse_class_group(s);
  if (!v) throw UsageError("unknown class group '" + s + "' (cancer, aggressive, indolent)");
  return *v;
}

std::vector<std::string> sorted_patients(const CohortManifest& m) {
  auto ids = m.patients;
  std::sort(ids.begin(), ids.end());
  return ids;
}

Range range_arg(const std::vector<double>& v) { return {v.at(0), v.at(1)}; }

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

// ---------------------------------------------------------------------------
// phantom

std::vector<double> vec(const Range& r) { return {r.lo, r.hi}; }
std::vector<double> vec(const ChannelSpec& c) {
  return {c.background, c.prostate, c.indolent_shift, c.aggressive_shift, c.noise_sigma};
}

struct PhantomCmd {
  inline static const PhantomSpec d{};
  Common common;
  LesionOpts lesion;
  std::string out;
  std::uint64_t seed = d.master_seed;
  int patients = d.n_patients;
  std::vector<std::int64_t> dims{d.grid.dims.begin(), d.grid.dims.end()};
  std::vector<double> spacing{d.grid.spacing.begin(), d.grid.spacing.end()};
  std::vector<double> prostate_x = vec(d.prostate_semi_x_mm), prostate_y = vec(d.prostate_semi_y_mm),
                      prostate_z = vec(d.prostate_semi_z_mm);
  int lesions_min = d.lesions_min, lesions_max = d.lesions_max;
  std::vector<double> lesion_radius = vec(d.lesion_radius_mm), lesion_half_height = vec(d.lesion_half_height_mm),
                      aggressive_fraction = vec(d.aggressive_fraction);
  std::vector<double> t2w = vec(d.t2w), adc = vec(d.adc);

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--out", out, "cohort directory");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--patients", patients, "cohort size");
    sub->add_option("--dims", dims, "grid size x y z")->expected(3);
    sub->add_option("--spacing", spacing, "voxel spacing x y z (mm)")->expected(3);
    sub->add_option("--prostate-semi-x", prostate_x, "gland semi-axis range (mm)")->expected(2);
    sub->add_option("--prostate-semi-y", prostate_y, "gland semi-axis range (mm)")->expected(2);
    sub->add_option("--prostate-semi-z", prostate_z, "gland semi-axis range (mm)")->expected(2);
    sub->add_option("--lesions-min", lesions_min, "fewest lesions per patient");
    sub->add_option("--lesions-max", lesions_max, "most lesions per patient");
    sub->add_option("--lesion-radius", lesion_radius, "in-plane lesion radius range (mm)")->expected(2);
    sub->add_option("--lesion-half-height", lesion_half_height, "lesion half extent along z (mm)")->expected(2);
    sub->add_option("--aggressive-fraction", aggressive_fraction, "aggressive share of each lesion")->expected(2);
    sub->add_option("--t2w", t2w, "background prostate indolent_shift aggressive_shift noise")->expected(5);
    sub->add_option("--adc", adc, "background prostate indolent_shift aggressive_shift noise")->expected(5);
    add_lesion_options(sub, lesion);
  }

  int run(const CLI::App& sub) {
    require(out, "--out");
    PhantomSpec spec;
    spec.master_seed = seed;
    spec.n_patients = patients;
    spec.grid = GridMeta{{dims[0], dims[1], dims[2]}, {spacing[0], spacing[1], spacing[2]}};
    spec.prostate_semi_x_mm = range_arg(prostate_x);
    spec.prostate_semi_y_mm = range_arg(prostate_y);
    spec.prostate_semi_z_mm = range_arg(prostate_z);
    spec.lesions_min = lesions_min;
    spec.lesions_max = lesions_max;
    spec.lesion_radius_mm = range_arg(lesion_radius);
    spec.lesion_half_height_mm = range_arg(lesion_half_height);
    spec.aggressive_fraction = range_arg(aggressive_fraction);
    spec.t2w = {t2w[0], t2w[1], t2w[2], t2w[3], t2w[4]};
    spec.adc = {adc[0], adc[1], adc[2], adc[3], adc[4]};
    validate(spec.grid);
    validate(spec);
    const auto params = lesion.params();

    write_phantom_cohort(out, spec, params, common.jobs);
    write_manifest_file(fs::path(out) / "run_phantom.txt", resolved_config(sub));
    std::cout << "phantom: wrote " << patients << " patients to " << out << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// lesions

struct LesionsCmd {
  Common common;
  LesionOpts lesion;
  std::string cohort, out, source = "dpath_pixel", group = "cancer";

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--cohort", cohort, "cohort directory");
    sub->add_option("--out", out, "lesion CSV");
    sub->add_option("--source", source, "label source to extract lesions from");
    sub->add_option("--group", group, "class group to binarize (cancer, aggressive, indolent)");
    add_lesion_options(sub, lesion);
  }

  int run(const CLI::App& sub) {
    require(cohort, "--cohort");
    require(out, "--out");
    const auto src = source_arg(source);
    const auto grp = group_arg(group);
    const auto params = lesion.params();
    const auto ids = sorted_patients(read_manifest(cohort));

    std::vector<std::string> chunks(ids.size());
    std::vector<std::size_t> counts(ids.size());
    parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
      const auto labels = read_volume_as<LabelVolume>(label_path(cohort, ids[i], src));
      const auto set = extract_lesions(labels, grp, params);
      std::ostringstream os;
      write_lesion_csv_rows(os, ids[i], set);
      chunks[i] = os.str();
      counts[i] = set.lesions.size();
    });

    std::ostringstream os;
    write_lesion_csv_header(os);
    for (const auto& c : chunks) os << c;
    write_text_file(out, os.str());
    write_manifest_file(sidecar(out, ".manifest.txt"), resolved_config(sub));
    std::size_t total = 0;
    for (auto c : counts) total += c;
    std::cout << "lesions: " << total << " lesions in " << ids.size() << " patients -> " << out << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// sextants

struct SextantsCmd {
  Common common;
  std::string cohort, out;

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--cohort", cohort, "cohort directory");
    sub->add_option("--out", out, "sextant CSV");
  }

  int run(const CLI::App& sub) {
    require(cohort, "--cohort");
    require(out, "--out");
    const auto ids = sorted_patients(read_manifest(cohort));
    std::vector<std::string> chunks(ids.size());
    parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
      const auto mask = read_volume_as<MaskVolume>(mask_path(cohort, ids[i]));
      const auto map = partition_sextants(mask);
      std::array<std::size_t, kNumSextants> n{};
      for (auto r : map.region.voxels()) {
        if (r != kOutsideSextant) ++n[r];
      }
      const double vv = voxel_volume_mm3(mask.meta());
      std::string rows;
      for (int s = 0; s < kNumSextants; ++s) {
        const auto id = static_cast<std::uint8_t>(s);
        rows += ids[i] + "," + std::to_string(s) + "," + sextant_name(id) + "," + std::to_string(n[id]) + "," +
                format_number(static_cast<double>(n[id]) * vv) + "," +
                std::to_string(map.zone_slices[static_cast<std::size_t>(s % 3)]) + "\n";
      }
      chunks[i] = std::move(rows);
    });
    std::string text = "patient_id,sextant_id,sextant,n_voxels,volume_mm3,zone_slices\n";
    for (const auto& c : chunks) text += c;
    write_text_file(out, text);
    write_manifest_file(sidecar(out, ".manifest.txt"), resolved_config(sub));
    std::cout << "sextants: " << ids.size() << " patients -> " << out << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// concordance

struct ConcordanceCmd {
  Common common;
  LesionOpts lesion;
  std::string cohort, out, truth = "dpath_lesion", other = "rad", group = "cancer";

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--cohort", cohort, "cohort directory");
    sub->add_option("--out", out, "concordance CSV");
    sub->add_option("--truth", truth, "reference label source");
    sub->add_option("--other", other, "compared label source");
    sub->add_option("--group", group, "class group (cancer, aggressive, indolent)");
    add_lesion_options(sub, lesion);
  }

  int run(const CLI::App& sub) {
    require(cohort, "--cohort");
    require(out, "--out");
    const auto truth_src = source_arg(truth);
    const auto other_src = source_arg(other);
    const auto grp = group_arg(group);
    const auto params = lesion.params();
    const auto ids = sorted_patients(read_manifest(cohort));

    std::vector<ConcordanceResult> results(ids.size());
    parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
      const auto mask = read_volume_as<MaskVolume>(mask_path(cohort, ids[i]));
      const auto t = read_volume_as<LabelVolume>(label_path(cohort, ids[i], truth_src));
      const auto o = read_volume_as<LabelVolume>(label_path(cohort, ids[i], other_src));
      require_same_meta(t.meta(), mask.meta(), ids[i]);
      const auto lesions = extract_lesions(t, grp, params);
      results[i] = concordance(t, lesions, o, grp, partition_sextants(mask));
    });

    std::vector<std::optional<double>> dice, auc;
    std::ostringstream os;
    const std::string tag = truth + "," + other + "," + group;
    os << "patient_id,truth,other,group,dice,lesion_auc\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
      dice.emplace_back(results[i].dice);
      auc.push_back(results[i].lesion_auc);
      os << ids[i] << "," << tag << "," << format_number(results[i].dice) << ","
         << format_number(results[i].lesion_auc) << "\n";
    }
    const auto sd = summarize(dice);
    const auto sa = summarize(auc);
    os << "mean," << tag << "," << format_number(sd.mean) << "," << format_number(sa.mean) << "\n";
    os << "std," << tag << "," << format_number(sd.stddev) << "," << format_number(sa.stddev) << "\n";
    write_text_file(out, os.str());

    std::string summary = "truth = " + truth + "\nother = " + other + "\ngroup = " + group +
                          "\nn_patients = " + std::to_string(ids.size()) + "\ndice = " + format_mean_std(sd) +
                          "\nlesion_auc = " + format_mean_std(sa) + "\nlesion_auc_undefined = " +
                          std::to_string(sa.n_undefined) + "\n";
    write_text_file(sidecar(out, ".summary.txt"), summary);
    write_manifest_file(sidecar(out, ".manifest.txt"), resolved_config(sub));
    std::cout << summary;
    return 0;
  }
};

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateCmd {
  Common common;
  LesionOpts lesion;
  std::string cohort, out, predictions;
  std::vector<std::string> truths{"dpath_lesion"}, models{"sim"}, groups{"cancer", "aggressive", "indolent"};
  double threshold = kDefaultScoreThreshold;

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--cohort", cohort, "cohort directory (masks and truth labels)");
    sub->add_option("--out", out, "metrics CSV");
    sub->add_option("--predictions", predictions,
                    "directory holding <patient>/prob_<model>.vgh (default: the cohort)");
    sub->add_option("--truth", truths, "truth label sources")->delimiter(',');
    sub->add_option("--model", models, "prediction model names")->delimiter(',');
    sub->add_option("--groups", groups, "class groups")->delimiter(',');
    sub->add_option("--threshold", threshold, "unit score threshold for the confusion counts")
        ->check(CLI::Range(0.0, 1.0));
    add_lesion_options(sub, lesion);
  }

  int run(const CLI::App& sub) {
    require(cohort, "--cohort");
    require(out, "--out");
    std::vector<LabelSource> truth_src;
    std::vector<ClassGroup> grps;
    for (const auto& t : truths) truth_src.push_back(source_arg(t));
    for (const auto& g : groups) grps.push_back(group_arg(g));
    for (const auto& m : models) {
      if (m.empty() || m.find_first_of("/\\ ") != std::string::npos) throw UsageError("bad model name '" + m + "'");
    }
    const fs::path pred_root = predictions.empty() ? fs::path(cohort) : fs::path(predictions);
    const EvalParams params{lesion.params(), threshold};
    const auto ids = sorted_patients(read_manifest(cohort));

    // per_patient[i] holds rows ordered by (model, truth, group).
    const auto nt = truth_src.size(), nm = models.size();
    std::vector<std::vector<MetricsRow>> per_patient(ids.size());
    parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
      PatientCase patient(ids[i], read_volume_as<MaskVolume>(mask_path(cohort, ids[i])));
      for (auto src : truth_src) patient.set_label(src, read_volume_as<LabelVolume>(label_path(cohort, ids[i], src)));
      std::vector<MetricsRow> out_rows;
      for (std::size_t m = 0; m < nm; ++m) {
        const auto pred = read_volume_as<ProbVolume>(prob_path(pred_root, ids[i], models[m]));
        require_same_meta(pred.meta(), patient.meta(), ids[i] + " prob_" + models[m]);
        for (std::size_t t = 0; t < nt; ++t) {
          for (auto g : grps) out_rows.push_back(evaluate_patient(patient, truth_src[t], pred, g, params));
        }
      }
      per_patient[i] = std::move(out_rows);
    });

    std::ostringstream csv;
    write_metrics_csv_header(csv);
    std::map<std::pair<std::size_t, std::size_t>, MetricsReport> reports;
    for (std::size_t t = 0; t < nt; ++t) {
      for (std::size_t m = 0; m < nm; ++m) {
        std::vector<MetricsRow> cell;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          const auto base = (m * nt + t) * grps.size();
          for (std::size_t g = 0; g < grps.size(); ++g) cell.push_back(per_patient[i][base + g]);
        }
        auto report = aggregate(std::move(cell));
        write_metrics_csv_rows(csv, truths[t], models[m], report);
        reports.emplace(std::pair{t, m}, std::move(report));
      }
    }
    write_text_file(out, csv.str());

    // One truth x model matrix per group and metric.
    std::string summary;
    const std::array<std::pair<const char*, MetricStat GroupSummary::*>, 4> metrics{
        {{"auc", &GroupSummary::auc},
         {"dice", &GroupSummary::dice},
         {"sensitivity", &GroupSummary::sensitivity},
         {"specificity", &GroupSummary::specificity}}};
    for (auto g : grps) {
      for (const auto& [name, field] : metrics) {
        summary += "[" + std::string(to_string(g)) + " " + name + "]\ntruth";
        for (const auto& m : models) summary += "," + m;
        summary += "\n";
        for (std::size_t t = 0; t < nt; ++t) {
          summary += truths[t];
          for (std::size_t m = 0; m < nm; ++m) {
            const auto& s = reports.at({t, m}).summary;
            const auto it = std::find_if(s.begin(), s.end(), [&](const GroupSummary& x) { return x.group == g; });
            summary += "," + (it == s.end() ? std::string("NA") : format_mean_std((*it).*field));
          }
          summary += "\n";
        }
        summary += "\n";
      }
    }
    write_text_file(sidecar(out, ".summary.txt"), summary);
    write_manifest_file(sidecar(out, ".manifest.txt"), resolved_config(sub));
    std::cout << summary;
    return 0;
  }
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateCmd {
  Common common;
  std::string cohort, model = "sim";
  std::vector<std::string> targets{"rad", "path", "pred"};
  DegradationSpec spec;

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--cohort", cohort, "cohort directory (needs dpath_lesion and dpath_pixel labels)");
    sub->add_option("--targets", targets, "any of rad, path, pred")->delimiter(',');
    sub->add_option("--model", model, "name for the simulated predictions (prob_<model>.vgh)");
    sub->add_option("--miss-prob", spec.miss_prob, "radiologist and prediction lesion miss probability");
    sub->add_option("--erosion", spec.erosion_mm, "radiologist in-plane erosion (mm)");
    sub->add_option("--slice-keep", spec.slice_keep_prob, "pathologist per-slice retention");
    sub->add_option("--fp-rate", spec.fp_rate, "expected false-positive blobs per patient");
    sub->add_option("--blur", spec.blur_mm, "prediction blur sigma (mm)");
    sub->add_option("--noise", spec.noise_sigma, "prediction noise sigma");
  }

  int run(const CLI::App& sub) {
    require(cohort, "--cohort");
    bool rad = false, path = false, pred = false;
    for (const auto& t : targets) {
      if (t == "rad") rad = true;
      else if (t == "path") path = true;
      else if (t == "pred") pred = true;
      else throw UsageError("unknown simulate target '" + t + "' (rad, path, pred)");
    }
    if (model.empty() || model.find_first_of("/\\ ") != std::string::npos) throw UsageError("bad model name");
    validate(spec);
    const auto manifest = read_manifest(cohort);
    const auto& ids = manifest.patients;

    parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
      const auto patient = read_case(cohort, ids[i]);
      const auto key = manifest.key(i);
      if (rad) write_volume(simulate_radiologist(patient, spec, key), label_path(cohort, ids[i], LabelSource::Rad));
      if (path) write_volume(simulate_pathologist(patient, spec, key), label_path(cohort, ids[i], LabelSource::Path));
      if (pred) write_volume(simulate_predictions(patient, spec, key), prob_path(cohort, ids[i], model));
    });

    auto kv = resolved_config(sub);
    kv.emplace_back("cohort_seed", std::to_string(manifest.seed));
    write_manifest_file(fs::path(cohort) / ("run_simulate_" + model + ".txt"), kv);
    std::cout << "simulate: " << ids.size() << " patients updated in " << cohort << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// standardize

struct StandardizeCmd {
  Common common;
  std::string cohort, channel = "t2w", out_channel, landmarks, method = "histogram", mode = "fit-apply";
  bool use_mask = false;
  std::vector<double> percentiles = default_percentiles();

  void attach(CLI::App* sub) {
    add_common(sub, common);
    sub->add_option("--cohort", cohort, "cohort directory");
    sub->add_option("--channel", channel, "input channel (img_<channel>.vgh)");
    sub->add_option("--out-channel", out_channel, "output channel name (default <channel>_std)");
    sub->add_option("--method", method, "histogram or zscore")->check(CLI::IsMember({"histogram", "zscore"}));
    sub->add_option("--mode", mode, "fit, apply or fit-apply")->check(CLI::IsMember({"fit", "apply", "fit-apply"}));
    sub->add_option("--landmarks", landmarks, "landmark file written by fit, read by apply");
    sub->add_option("--percentiles", percentiles, "landmark percentiles for fitting");
    sub->add_flag("--mask", use_mask, "take statistics over the prostate mask only");
  }

  int run(const CLI::App& sub) {
    require(cohort, "--cohort");
    const bool histogram = method == "histogram";
    const bool fit = mode != "apply", apply = mode != "fit";
    if (histogram) require(landmarks, "--landmarks");
    if (!histogram && mode != "apply" && mode != "fit-apply") throw UsageError("zscore has nothing to fit");
    const std::string target = out_channel.empty() ? channel + "_std" : out_channel;
    if (target == channel) throw UsageError("--out-channel must differ from --channel");
    const auto ids = sorted_patients(read_manifest(cohort));

    std::vector<IntensityVolume> vols;
    std::vector<MaskVolume> masks;
    vols.reserve(ids.size());
    for (const auto& id : ids) {
      vols.push_back(read_volume_as<IntensityVolume>(intensity_path(cohort, id, channel)));
      if (use_mask) masks.push_back(read_volume_as<MaskVolume>(mask_path(cohort, id)));
    }
    std::vector<const MaskVolume*> mask_ptrs;
    for (const auto& m : masks) mask_ptrs.push_back(&m);
    const auto mask_of = [&](std::size_t i) { return use_mask ? &masks[i] : nullptr; };

    LandmarkTable lm;
    if (histogram) {
      if (fit) {
        lm = fit_landmarks(vols, mask_ptrs, percentiles);
        write_landmarks(lm, landmarks);
      } else {
        lm = read_landmarks(landmarks);
      }
    }
    if (apply) {
      parallel_for(ids.size(), common.jobs, [&](std::size_t i) {
        const auto result = histogram ? standardize(vols[i], lm, mask_of(i)) : zscore(vols[i], mask_of(i));
        write_volume(result, intensity_path(cohort, ids[i], target));
      });
    }
    write_manifest_file(fs::path(cohort) / ("run_standardize_" + target + ".txt"), resolved_config(sub));
    std::cout << "standardize: " << method << " " << mode << " over " << ids.size() << " patients\n";
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lesion label processing and lesion-level evaluation harness", "lesion_harness"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  PhantomCmd phantom;
  LesionsCmd lesions;
  SextantsCmd sextants;
  ConcordanceCmd concordance_cmd;
  EvaluateCmd evaluate;
  SimulateCmd simulate;
  StandardizeCmd standardize_cmd;

  struct Entry {
    CLI::App* sub;
    std::string* config;
    std::function<int(const CLI::App&)> run;
  };
  std::vector<Entry> entries;
  const auto reg = [&](const char* name, const char* help, auto& cmd) {
    auto* sub = app.add_subcommand(name, help);
    cmd.attach(sub);
    entries.push_back({sub, &cmd.common.config, [&cmd](const CLI::App& s) { return cmd.run(s); }});
  };
  reg("phantom", "generate a synthetic phantom cohort", phantom);
  reg("lesions", "extract graded lesions to CSV", lesions);
  reg("sextants", "partition each prostate into sextants", sextants);
  reg("concordance", "label-vs-label Dice and lesion AUC", concordance_cmd);
  reg("evaluate", "lesion-level metrics of predictions against truth labels", evaluate);
  reg("simulate", "write radiologist/pathologist labels and simulated predictions", simulate);
  reg("standardize", "fit/apply intensity standardization", standardize_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto& e : entries) {
    if (!e.sub->parsed()) continue;
    try {
      apply_config(*e.sub, *e.config);
      return e.run(*e.sub);
    } catch (const CLI::ParseError& err) {
      std::cerr << "error: " << err.what() << "\n";
      return kExitUsage;
    } catch (const UsageError& err) {
      std::cerr << "error: " << err.what() << "\n";
      return kExitUsage;
    } catch (const Error& err) {
      std::cerr << "error: " << err.what() << "\n";
      return err.kind() == ErrorKind::InvalidArgument ? kExitUsage : kExitRuntime;
    } catch (const std::exception& err) {
      std::cerr << "error: " << err.what() << "\n";
      return kExitRuntime;
    }
  }
  return kExitUsage;
}
