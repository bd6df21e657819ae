// beamsel: command-line front end for the two-stage beam selection pipeline.
//
// Every command reads an optional JSON config (--config), resolves the output
// directory (--out, then BEAMSEL_OUT, then the config) and writes its
// artifacts there, followed by manifests/<command>.json.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "beamsel/config.hpp"
#include "beamsel/crops.hpp"
#include "beamsel/csv.hpp"
#include "beamsel/errors.hpp"
#include "beamsel/eval.hpp"
#include "beamsel/fcn.hpp"
#include "beamsel/io.hpp"
#include "beamsel/labeler.hpp"
#include "beamsel/snr.hpp"
#include "beamsel/stage1.hpp"
#include "beamsel/stage2.hpp"

namespace fs = std::filesystem;
using namespace beamsel;
using nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kUsage = 2,
  kConfig = 3,
  kMissing = 4,
  kFormat = 5,
  kDomain = 6,
  kDetection = 7,
  kOther = 8,
};

struct Globals {
  std::string config_path;
  std::string out;
  std::size_t threads = 0;
};

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

RunConfig load_run_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? parse_config("{}") : parse_config(read_text(g.config_path));
  apply_env_overrides(cfg);
  if (!g.out.empty()) cfg.out_dir = g.out;
  if (g.threads > 0) cfg.threads = g.threads;
  return cfg;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Collects artifact paths (relative to the output directory) for the
/// command manifest. Timing artifacts are listed without a digest.
class Run {
 public:
  Run(std::string command, RunConfig cfg) : command_(std::move(command)), cfg_(std::move(cfg)) {
    fs::create_directories(root());
  }

  const RunConfig& cfg() const { return cfg_; }
  fs::path root() const { return fs::path(cfg_.out_dir); }
  fs::path at(const std::string& rel) const { return root() / rel; }

  void produced(const std::string& rel, bool timing = false) { outputs_.emplace_back(rel, timing); }

  void note(const std::string& key, json value) { extra_[key] = std::move(value); }

  void finish() {
    json m;
    m["command"] = command_;
    m["config"] = json::parse(config_to_json(cfg_));
    m["config"].erase("out_dir");
    m["config"].erase("threads");
    json outs = json::array();
    for (const auto& [rel, timing] : outputs_) {
      json o{{"path", rel}};
      if (timing) {
        o["timing"] = true;
      } else {
        const std::string bytes = read_text(at(rel));
        o["bytes"] = bytes.size();
        o["fnv1a64"] = hex64(fnv1a(bytes));
      }
      outs.push_back(o);
    }
    m["outputs"] = outs;
    for (const auto& [k, v] : extra_) m[k] = v;
    write_text_atomic(at("manifests/" + command_ + ".json"), m.dump(2) + "\n");
  }

 private:
  std::string command_;
  RunConfig cfg_;
  std::vector<std::pair<std::string, bool>> outputs_;
  std::map<std::string, json> extra_;
};

std::string snr_name(const RunConfig& c) { return "snr_" + to_string(c.obstacle) + ".csv"; }
std::string label_name(const RunConfig& c) { return "labels_" + to_string(c.obstacle) + ".csv"; }

// Stage-2 artifacts are per detection mode because the grids differ.
std::string per_mode(const RunConfig& c, const std::string& stem, const std::string& ext) {
  return stem + "_" + to_string(c.mode) + ext;
}

std::string camera_set(const std::vector<int>& cams) {
  std::string s;
  for (int c : cams) s += (s.empty() ? "" : "+") + std::to_string(c);
  return s;
}

std::string case_stem(const Case& c) { return "case_" + std::to_string(c.i) + "_" + std::to_string(c.j); }

LabelTable load_labels(const Run& run) {
  std::ifstream in(run.at(label_name(run.cfg())));
  if (!in) throw MissingInputError("missing " + label_name(run.cfg()) + " (run `label` first)");
  return read_label_csv(in);
}

std::ifstream open_artifact(const Run& run, const std::string& rel, const char* producer) {
  std::ifstream in(run.at(rel), std::ios::binary);
  if (!in) throw MissingInputError("missing " + rel + " (run `" + producer + "` first)");
  return in;
}

nn::Network load_artifact_weights(const Run& run, const std::string& rel, const char* producer) {
  std::ifstream in = open_artifact(run, rel, producer);
  return read_weights(in);
}

void write_history(Run& run, const std::string& rel, const nn::TrainHistory& h) {
  std::ostringstream s;
  s << "epoch,train_loss,train_accuracy,val_accuracy\n";
  for (const nn::EpochRecord& e : h.epochs) {
    s << e.epoch << ',' << csv::format_double(e.train_loss) << ',' << csv::format_double(e.train_accuracy)
      << ',' << csv::format_double(e.val_accuracy) << '\n';
  }
  write_text_atomic(run.at(rel), s.str());
  run.produced(rel);
}

nn::EpochCallback progress(const char* stage) {
  return [stage](const nn::EpochRecord& e) {
    std::cerr << stage << " epoch " << e.epoch << " loss " << e.train_loss << " train_acc " << e.train_accuracy
              << " val_acc " << e.val_accuracy << '\n';
  };
}

// ---- commands ----

void cmd_gen_scenes(Run& run) {
  const RunConfig& cfg = run.cfg();
  std::ostringstream s;
  s << "camera,case_i,case_j,path,tx_top,tx_left,tx_height,tx_width,tx_occluded,"
       "rx_top,rx_left,rx_height,rx_width,rx_occluded\n";
  for (int cam : cfg.cameras) {
    for (const Case& c : all_cases()) {
      const Scene sc = render_base(cfg.scene(cam), c);
      const std::string rel = "scenes/cam" + std::to_string(cam) + "/" + case_stem(c) + ".ppm";
      save_ppm(run.at(rel), sc.image);
      run.produced(rel);
      s << cam << ',' << c.i << ',' << c.j << ',' << rel;
      for (const MarkerBox& m : sc.markers) {
        s << ',' << m.top << ',' << m.left << ',' << m.height << ',' << m.width << ',' << (m.occluded ? 1 : 0);
      }
      s << '\n';
    }
  }
  write_text_atomic(run.at("scenes.csv"), s.str());
  run.produced("scenes.csv");
  std::cout << "wrote " << 25 * cfg.cameras.size() << " scenes\n";
}

void cmd_gen_snr(Run& run) {
  const RunConfig& cfg = run.cfg();
  const SnrTable t = generate_snr_table(cfg.scene(1), cfg.snr_samples, cfg.seed);
  write_file_atomic(run.at(snr_name(cfg)), [&](std::ostream& out) { write_snr_csv(out, t); });
  run.produced(snr_name(cfg));
  std::cout << "wrote " << snr_name(cfg) << " (" << t.entry_count() << " entries)\n";
}

void cmd_label(Run& run) {
  const RunConfig& cfg = run.cfg();
  std::ifstream in = open_artifact(run, snr_name(cfg), "gen-snr");
  const LabelTable labels = build_label_table(read_snr_csv(in));
  write_file_atomic(run.at(label_name(cfg)), [&](std::ostream& out) { write_label_csv(out, labels); });
  run.produced(label_name(cfg));
  for (const Case& c : all_cases()) {
    const BeamPair p = labels.at(c);
    std::cout << c.i << ',' << c.j << ',' << p.t << ',' << p.r << '\n';
  }
}

void cmd_gen_crops(Run& run) {
  const RunConfig& cfg = run.cfg();
  Stage1DataOptions opt;
  opt.scenes = default_stage1_scenes(cfg.scene(1));
  opt.images_per_case = cfg.images_per_case;
  opt.seed = cfg.seed;
  opt.stride = cfg.stride;
  const CropSplits splits = build_stage1_dataset(opt);
  const std::pair<const char*, const std::vector<LabeledCrop>*> parts[] = {
      {"crops/train.bsc", &splits.train}, {"crops/val.bsc", &splits.val}, {"crops/test.bsc", &splits.test}};
  for (const auto& [rel, crops] : parts) {
    write_file_atomic(run.at(rel), [&](std::ostream& out) { write_crops(out, *crops, cfg.stride); });
    run.produced(rel);
  }
  std::cout << "crops train=" << splits.train.size() << " val=" << splits.val.size()
            << " test=" << splits.test.size() << '\n';
}

CropFile load_crop_file(const Run& run, const std::string& rel) {
  std::ifstream in = open_artifact(run, rel, "gen-crops");
  return read_crops(in);
}

void cmd_train_stage1(Run& run) {
  const RunConfig& cfg = run.cfg();
  const CropFile train = load_crop_file(run, "crops/train.bsc");
  const CropFile val = load_crop_file(run, "crops/val.bsc");
  const CropFile test = load_crop_file(run, "crops/test.bsc");
  if (train.window != cfg.window) {
    throw ConfigError("crop files use window " + std::to_string(train.window) + ", config says " +
                      std::to_string(cfg.window));
  }
  nn::Network net = make_stage1(cfg.window, cfg.seed + 1);
  const nn::TrainHistory h = nn::train_classifier(net, train.set, val.set, cfg.stage1_options(), progress("stage1"));
  const double acc = nn::accuracy(net, test.set, cfg.effective_threads());
  save_weights(run.at("stage1.bsw"), net);
  run.produced("stage1.bsw");
  write_history(run, "stage1_history.csv", h);
  run.note("test_accuracy", acc);
  std::cout << "stage1 test_accuracy=" << acc << " epochs=" << h.epochs.size() << '\n';
}

void cmd_convert_fcn(Run& run) {
  const nn::Network cnn = load_artifact_weights(run, "stage1.bsw", "train-stage1");
  const nn::Network fcn = convert_cnn_to_fcn(cnn);
  const RunConfig& cfg = run.cfg();
  Image probe = render_base(cfg.scene(cfg.cameras.front()), Case{3, 3}).image;
  const double diff = equivalence_check(cnn, fcn, probe, 100, cfg.seed);
  save_weights(run.at("fcn.bsw"), fcn);
  run.produced("fcn.bsw");
  run.note("equivalence_max_abs_diff", diff);
  const nn::Shape out = fcn.output_shape({cfg.rows, cfg.cols, 3});
  std::cout << "fcn output " << nn::shape_string(out) << " stride " << fcn_stride(fcn)
            << " equivalence_max_abs_diff=" << diff << '\n';
}

struct Detectors {
  nn::Network cnn;
  std::optional<nn::Network> fcn;
  Detector det;
};

Detectors load_detector(const Run& run, DetectMode mode) {
  Detectors d{load_artifact_weights(run, "stage1.bsw", "train-stage1"), std::nullopt, {}};
  const RunConfig& cfg = run.cfg();
  d.det.mode = mode;
  d.det.stride = cfg.stride;
  d.det.topk = cfg.topk;
  d.det.threads = cfg.effective_threads();
  if (mode == DetectMode::Fcn) d.fcn = load_artifact_weights(run, "fcn.bsw", "convert-fcn");
  return d;
}

void bind(Detectors& d) {
  d.det.cnn = &d.cnn;
  d.det.fcn = d.fcn ? &*d.fcn : nullptr;
}

void cmd_bitmap(Run& run) {
  const RunConfig& cfg = run.cfg();
  const LabelTable labels = load_labels(run);
  Detectors d = load_detector(run, cfg.mode);
  bind(d);
  const std::string set = camera_set(cfg.cameras);
  std::ostringstream s;
  s << "case_i,case_j,light_level,camera_set,bitmap_path,t,r\n";
  for (const Case& c : all_cases()) {
    std::vector<Image> bases;
    for (int cam : cfg.cameras) bases.push_back(render_base(cfg.scene(cam), c).image);
    const BeamPair p = labels.at(c);
    for (std::size_t level = 1; level <= cfg.light_levels; ++level) {
      const double f = light_factor(level, cfg.light_levels, cfg.light_min, cfg.light_max);
      std::string paths;
      for (std::size_t k = 0; k < bases.size(); ++k) {
        const std::string rel = "bitmaps/" + to_string(cfg.mode) + "/cam" + std::to_string(cfg.cameras[k]) + "/" + case_stem(c) + "_L" +
                                std::to_string(level) + ".pgm";
        save_pgm(run.at(rel), d.det.bitmap(relight(bases[k], f)), 1);
        run.produced(rel);
        paths += (paths.empty() ? "" : "+") + rel;
      }
      s << c.i << ',' << c.j << ',' << level << ',' << set << ',' << paths << ',' << p.t << ',' << p.r << '\n';
    }
  }
  write_text_atomic(run.at(per_mode(cfg, "stage2_manifest", ".csv")), s.str());
  run.produced(per_mode(cfg, "stage2_manifest", ".csv"));
  std::cout << "wrote " << 25 * cfg.light_levels << " bitmap samples for cameras " << set << '\n';
}

std::vector<std::string> split_plus(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find('+', start);
    out.push_back(s.substr(start, p - start));
    if (p == std::string::npos) return out;
    start = p + 1;
  }
}

std::vector<Stage2Sample> load_stage2_samples(const Run& run) {
  const RunConfig& cfg = run.cfg();
  std::ifstream in = open_artifact(run, per_mode(cfg, "stage2_manifest", ".csv"), "bitmap");
  csv::expect_header(in, "case_i,case_j,light_level,camera_set,bitmap_path,t,r");
  std::vector<Stage2Sample> out;
  std::string line;
  std::size_t line_no = 1;
  while (csv::next_row(in, line, line_no)) {
    const auto f = csv::split(line);
    csv::expect_fields(f, 7, line_no);
    Stage2Sample s;
    s.c = Case{static_cast<int>(csv::parse_int(f[0], line_no)), static_cast<int>(csv::parse_int(f[1], line_no))};
    validate(s.c);
    s.light_level = static_cast<std::size_t>(csv::parse_int(f[2], line_no));
    std::vector<BitMap> maps;
    for (const std::string& rel : split_plus(std::string(f[4]))) maps.push_back(load_pgm(run.at(rel)));
    s.bitmap = stack_bitmaps(maps);
    s.label = encode_pair(BeamPair{static_cast<int>(csv::parse_int(f[5], line_no)),
                                   static_cast<int>(csv::parse_int(f[6], line_no))});
    out.push_back(std::move(s));
  }
  if (out.empty()) throw FormatError("stage2_manifest.csv has no samples");
  return out;
}

void cmd_train_stage2(Run& run) {
  const RunConfig& cfg = run.cfg();
  const std::vector<Stage2Sample> samples = load_stage2_samples(run);
  const Stage2Result r = train_stage2(samples, cfg.stage2_options(), cfg.seed + 2, cfg.seed + 3, progress("stage2"));
  save_weights(run.at(per_mode(cfg, "stage2", ".bsw")), r.net);
  run.produced(per_mode(cfg, "stage2", ".bsw"));
  write_history(run, per_mode(cfg, "stage2_history", ".csv"), r.history);
  std::ostringstream s;
  s << "index,split\n";
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"train", &r.split.train}, {"val", &r.split.val}, {"test", &r.split.test}};
  for (const auto& [name, idx] : parts)
    for (std::size_t i : *idx) s << i << ',' << name << '\n';
  write_text_atomic(run.at(per_mode(cfg, "stage2_split", ".csv")), s.str());
  run.produced(per_mode(cfg, "stage2_split", ".csv"));
  run.note("test_accuracy", r.test_accuracy);
  std::cout << "stage2 test_accuracy=" << r.test_accuracy << '\n';
}

void cmd_predict(Run& run, const std::vector<std::string>& images) {
  const RunConfig& cfg = run.cfg();
  if (images.empty() || images.size() > 8) throw ArgumentError("predict needs 1 to 8 --image files");
  std::vector<Image> imgs;
  for (const std::string& p : images) imgs.push_back(load_ppm(p));
  Detectors d = load_detector(run, cfg.mode);
  bind(d);
  const nn::Network stage2 = load_artifact_weights(run, per_mode(cfg, "stage2", ".bsw"), "train-stage2");
  const auto t0 = Clock::now();
  std::vector<BitMap> maps;
  for (const Image& img : imgs) maps.push_back(d.det.bitmap(img));
  const BitMap stacked = stack_bitmaps(maps);
  const double detect_ms = ms_since(t0);
  const auto t1 = Clock::now();
  const PairPrediction p = predict_pair(stage2, stacked);
  const double classify_ms = ms_since(t1);
  std::cout << "t=" << p.pair.t << " r=" << p.pair.r << " class=" << p.cls << " confidence=" << p.confidence
            << " mode=" << to_string(cfg.mode) << " detect_ms=" << detect_ms << " classify_ms=" << classify_ms
            << " total_ms=" << detect_ms + classify_ms << '\n';
  json j{{"t", p.pair.t}, {"r", p.pair.r}, {"class", p.cls}, {"confidence", p.confidence}};
  write_text_atomic(run.at("prediction.json"), j.dump(2) + "\n");
  run.produced("prediction.json");
}

void cmd_evaluate(Run& run) {
  const RunConfig& cfg = run.cfg();
  const std::vector<Stage2Sample> samples = load_stage2_samples(run);
  const nn::Network stage2 = load_artifact_weights(run, per_mode(cfg, "stage2", ".bsw"), "train-stage2");
  const IndexSplit split = split_indices(samples.size(), cfg.seed + 2);
  const Stage2Set test(samples, split.test);
  const std::vector<std::size_t> preds = nn::predict_classes(stage2, test, cfg.effective_threads());
  std::vector<std::size_t> truth;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < test.size(); ++k) {
    truth.push_back(test.label(k));
    correct += preds[k] == truth.back();
  }
  const double acc = test.size() == 0 ? 0.0 : static_cast<double>(correct) / test.size();
  const auto cm = confusion_matrix(preds, truth, kPairCount);
  std::ostringstream c;
  for (const auto& row : cm) {
    for (std::size_t j = 0; j < row.size(); ++j) c << (j ? "," : "") << row[j];
    c << '\n';
  }
  write_text_atomic(run.at(per_mode(cfg, "confusion", ".csv")), c.str());
  run.produced(per_mode(cfg, "confusion", ".csv"));

  // IoU of extracted boxes against marker boxes, per test sample and camera.
  const std::size_t grid_stride =
      cfg.mode == DetectMode::Fcn ? fcn_stride(load_artifact_weights(run, "fcn.bsw", "convert-fcn")) : cfg.stride;
  std::ostringstream s;
  s << "case_i,case_j,light_level,camera,tx_iou,rx_iou\n";
  double min_iou = 1.0;
  std::size_t failures = 0;
  for (std::size_t idx : split.test) {
    const Stage2Sample& smp = samples[idx];
    for (std::size_t k = 0; k < cfg.cameras.size(); ++k) {
      const int cam = cfg.cameras[k];
      const Scene sc = render_base(cfg.scene(cam), smp.c);
      const CropGrid grid{cfg.window, grid_stride, smp.bitmap.dim(0), smp.bitmap.dim(1)};
      BitMap ch({grid.rows, grid.cols, 1});
      for (std::size_t q = 0; q < ch.size(); ++q) ch[q] = smp.bitmap[q * smp.bitmap.dim(2) + k];
      std::string tx = "NaN", rx = "NaN";
      try {
        const DeviceBoxes b = extract_boxes(ch, tx_side_for_camera(cam));
        for (const MarkerBox& m : sc.markers) {
          if (m.occluded) continue;
          const double v = iou(m.device == Device::Tx ? b.tx : b.rx, ground_truth_rect(m, grid));
          min_iou = std::min(min_iou, v);
          failures += v <= 0.5;
          (m.device == Device::Tx ? tx : rx) = csv::format_double(v);
        }
      } catch (const DetectionError&) {
        ++failures;
        min_iou = 0.0;
      }
      s << smp.c.i << ',' << smp.c.j << ',' << smp.light_level << ',' << cam << ',' << tx << ',' << rx << '\n';
    }
  }
  write_text_atomic(run.at(per_mode(cfg, "iou", ".csv")), s.str());
  run.produced(per_mode(cfg, "iou", ".csv"));
  std::ostringstream summary;
  summary << "test_samples=" << test.size() << "\naccuracy=" << csv::format_double(acc)
          << "\nmin_iou=" << csv::format_double(min_iou) << "\niou_failures=" << failures << '\n';
  write_text_atomic(run.at(per_mode(cfg, "evaluation", ".txt")), summary.str());
  run.produced(per_mode(cfg, "evaluation", ".txt"));
  std::cout << summary.str();
}

void cmd_bench(Run& run, std::size_t repeats) {
  const RunConfig& cfg = run.cfg();
  Detectors d = load_detector(run, DetectMode::PerCrop);
  d.fcn = load_artifact_weights(run, "fcn.bsw", "convert-fcn");
  d.det.threads = 1;  // timing runs single-threaded
  bind(d);
  std::vector<Image> imgs;
  for (int cam : cfg.cameras) imgs.push_back(render_base(cfg.scene(cam), Case{3, 3}).image);

  std::ostringstream s;
  s << "path,stage,mean_ms,p50_ms,p95_ms,repeats,threads\n";
  std::map<std::string, double> totals;
  for (DetectMode mode : {DetectMode::PerCrop, DetectMode::Fcn}) {
    Detector det = d.det;
    det.mode = mode;
    BitMap stacked;
    const TimingStats detect = bench_inference(
        [&] {
          std::vector<BitMap> maps;
          for (const Image& img : imgs) maps.push_back(det.bitmap(img));
          stacked = stack_bitmaps(maps);
        },
        repeats);
    TimingStats classify;
    RunConfig mode_cfg = cfg;
    mode_cfg.mode = mode;
    const std::string weights = per_mode(mode_cfg, "stage2", ".bsw");
    const bool fits = fs::exists(run.at(weights));
    std::optional<nn::Network> stage2;
    if (fits) stage2 = load_artifact_weights(run, weights, "train-stage2");
    if (fits) classify = bench_inference([&] { (void)predict_pair(*stage2, stacked); }, repeats);
    const std::string path = to_string(mode);
    s << path << ",detect," << detect.mean_ms << ',' << detect.p50_ms << ',' << detect.p95_ms << ',' << repeats
      << ",1\n";
    if (fits) {
      s << path << ",classify," << classify.mean_ms << ',' << classify.p50_ms << ',' << classify.p95_ms << ','
        << repeats << ",1\n";
    }
    totals[path] = detect.mean_ms + classify.mean_ms;
    s << path << ",total," << totals[path] << ",,," << repeats << ",1\n";
  }
  write_text_atomic(run.at("bench.csv"), s.str());
  run.produced("bench.csv", true);
  std::cout << s.str() << "fcn_speedup=" << totals["per-crop"] / totals["fcn"] << '\n';
}

void cmd_report(Run& run, double predicted_ms, double dwell_ms, std::size_t pairs) {
  bool timing = false;
  if (predicted_ms <= 0) {
    // Take the measured total of the configured mode from bench.csv.
    std::ifstream in = open_artifact(run, "bench.csv", "bench");
    csv::expect_header(in, "path,stage,mean_ms,p50_ms,p95_ms,repeats,threads");
    std::string line;
    std::size_t line_no = 1;
    while (csv::next_row(in, line, line_no)) {
      const auto f = csv::split(line);
      csv::expect_fields(f, 7, line_no);
      if (f[0] == to_string(run.cfg().mode) && f[1] == "total") predicted_ms = csv::parse_double(f[2], line_no);
    }
    if (predicted_ms <= 0) throw FormatError("bench.csv has no total for mode " + to_string(run.cfg().mode));
    timing = true;
  }
  const LatencyReport r = latency_report(predicted_ms, dwell_ms, pairs);
  std::ostringstream s;
  s << "predicted_ms,dwell_ms,pairs,sweep_ms,reduction\n"
    << csv::format_double(r.predicted_ms) << ',' << csv::format_double(r.dwell_ms) << ',' << r.pairs << ','
    << csv::format_double(r.sweep_ms) << ',' << csv::format_double(r.reduction) << '\n';
  write_text_atomic(run.at("latency.csv"), s.str());
  run.produced("latency.csv", timing);
  std::ostringstream t;
  t << "Exhaustive sweep: " << r.pairs << " pairs x " << r.dwell_ms << " ms = " << r.sweep_ms << " ms\n"
    << "Predicted path:   " << r.predicted_ms << " ms\n"
    << "Reduction:        " << 100.0 * r.reduction << " %\n";
  write_text_atomic(run.at("report.txt"), t.str());
  run.produced("report.txt", timing);
  std::cout << t.str();
}

int fail(int code, const char* kind, const std::string& message) {
  std::string m = message;
  for (char& c : m)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error code=" << code << " kind=" << kind << " message=" << m << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage camera-based mmWave beam selection"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--out", g.out, "Output directory (overrides BEAMSEL_OUT and the config)");
  app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::PositiveNumber);

  std::vector<std::string> images;
  std::string mode_override;
  std::size_t repeats = 100;
  double predicted_ms = 0.0, dwell_ms = 0.275;
  std::size_t pairs = kPairCount;

  std::map<std::string, CLI::App*> cmds;
  for (const char* name : {"gen-scenes", "gen-snr", "label", "gen-crops", "train-stage1", "bitmap", "convert-fcn",
                           "train-stage2", "predict", "evaluate", "bench", "report"}) {
    cmds[name] = app.add_subcommand(name);
  }
  cmds["gen-scenes"]->description("Render the base scene of every case for each configured camera");
  cmds["gen-snr"]->description("Simulate the SNR sweep table");
  cmds["label"]->description("Pick the best beam pair per case from the SNR table");
  cmds["gen-crops"]->description("Build the balanced Stage-1 crop splits");
  cmds["train-stage1"]->description("Train the crop classifier");
  cmds["bitmap"]->description("Detect devices and write Stage-2 bitmaps plus manifest");
  cmds["convert-fcn"]->description("Convert the crop classifier into a fully convolutional network");
  cmds["train-stage2"]->description("Train the beam-pair classifier");
  cmds["evaluate"]->description("Test accuracy, confusion matrix and IoU");
  cmds["bench"]->description("Time per-crop and FCN inference");
  cmds["report"]->description("Latency comparison against an exhaustive sweep");
  auto* predict = cmds["predict"];
  predict->description("Predict the beam pair for one image per configured camera");
  predict->add_option("--image", images, "PPM image (repeat for stacked cameras)")->required();
  for (const char* name : {"bitmap", "train-stage2", "predict", "evaluate", "report"}) {
    cmds[name]->add_option("--mode", mode_override, "per-crop or fcn");
  }
  cmds["bench"]->add_option("--repeats", repeats, "Timed passes per path")->check(CLI::Range(10, 100000));
  auto* report = cmds["report"];
  report->add_option("--predicted-ms", predicted_ms, "Prediction time (default: from bench.csv)");
  report->add_option("--dwell-ms", dwell_ms, "Per-pair sweep dwell time");
  report->add_option("--pairs", pairs, "Beam pairs in the exhaustive sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    RunConfig cfg = load_run_config(g);
    if (!mode_override.empty()) {
      try {
        cfg.mode = parse_mode(mode_override);
      } catch (const Error& e) {
        return fail(kUsage, "usage", e.what());
      }
    }
    const std::string name = app.get_subcommands().front()->get_name();
    Run run(name, cfg);
    if (name == "gen-scenes") cmd_gen_scenes(run);
    else if (name == "gen-snr") cmd_gen_snr(run);
    else if (name == "label") cmd_label(run);
    else if (name == "gen-crops") cmd_gen_crops(run);
    else if (name == "train-stage1") cmd_train_stage1(run);
    else if (name == "bitmap") cmd_bitmap(run);
    else if (name == "convert-fcn") cmd_convert_fcn(run);
    else if (name == "train-stage2") cmd_train_stage2(run);
    else if (name == "predict") cmd_predict(run, images);
    else if (name == "evaluate") cmd_evaluate(run);
    else if (name == "bench") cmd_bench(run, repeats);
    else if (name == "report") cmd_report(run, predicted_ms, dwell_ms, pairs);
    run.finish();
    return kOk;
  } catch (const ConfigError& e) {
    return fail(kConfig, e.kind(), e.what());
  } catch (const MissingInputError& e) {
    return fail(kMissing, e.kind(), e.what());
  } catch (const FormatError& e) {
    return fail(kFormat, e.kind(), e.what());
  } catch (const DetectionError& e) {
    return fail(kDetection, e.kind(), e.what());
  } catch (const Error& e) {
    return fail(kDomain, e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(kOther, "internal", e.what());
  }
}
