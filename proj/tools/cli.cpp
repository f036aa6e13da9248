#include "cli.hpp"

#include "run_config.hpp"

#include <vcdet/error.hpp>
#include <vcdet/eval.hpp>
#include <vcdet/mask_graph.hpp>
#include <vcdet/ov_labeler.hpp>
#include <vcdet/parallel.hpp>
#include <vcdet/provider.hpp>
#include <vcdet/random.hpp>
#include <vcdet/scene_io.hpp>
#include <vcdet/synthetic.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace vcdet::cli {

namespace {

constexpr const char* kVersion = "0.3.0";

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::uint64_t digest_file(const fs::path& p, std::uint64_t basis = 0xcbf29ce484222325ULL) {
  const std::string bytes = read_text_file(p);
  return fnv1a64(bytes.data(), bytes.size(), basis);
}

fs::path resolve_rel(const fs::path& base, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p : base / p;
}

/// FNV-1a digests of the manifest and of every file it references, chained in
/// manifest order.
json scene_digests(const fs::path& manifest_path) {
  const SceneManifest m = parse_manifest(manifest_path);
  const fs::path base = manifest_path.parent_path();
  std::uint64_t chain = digest_file(manifest_path);
  const std::uint64_t manifest_digest = chain;
  chain = digest_file(resolve_rel(base, m.point_cloud), chain);
  chain = digest_file(resolve_rel(base, m.masks), chain);
  for (const auto& f : m.frames) chain = digest_file(resolve_rel(base, f.depth), chain);
  return {{"manifest", hex64(manifest_digest)}, {"scene_files", hex64(chain)}};
}

void write_metadata(const fs::path& out, const std::string& command, const RunConfig& config, json inputs) {
  json meta;
  meta["tool"] = "vcdet";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["config"] = json::parse(config.to_json());
  meta["seed"] = config.seed;
  meta["inputs"] = std::move(inputs);
  fs::path meta_path = out;
  meta_path += ".meta.json";
  write_text_file(meta_path, meta.dump(2) + "\n");
}

void add_run_options(CLI::App* app, RunConfig& c) {
  app->add_option("--tau-rate", c.merge.tau_rate, "consensus-rate threshold for graph edges")->capture_default_str();
  app->add_option("--merge-schedule", c.merge.observer_schedule, "minimum observers per merge iteration, e.g. 1,2,3")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--tau-contain", c.merge.tau_contain, "covered fraction for mask containment")->capture_default_str();
  app->add_option("--contain-radius", c.merge.contain_radius, "containment neighbor radius (m)")->capture_default_str();
  app->add_option("--min-points", c.merge.min_points, "drop instances with fewer points")->capture_default_str();
  app->add_option("--min-mask-pixels", c.merge.min_mask_pixels, "drop masks with fewer valid-depth pixels")
      ->capture_default_str();
  app->add_option("--min-visible-points", c.merge.min_visible_points, "points needed to count a frame as visible")
      ->capture_default_str();
  app->add_option("--tau-occ", c.merge.tau_occ, "occlusion threshold (m)")->capture_default_str();
  app->add_option("--k-views", c.labeler.k_views, "views per box for labeling")->capture_default_str();
  app->add_option("--scales", c.labeler.scales, "crop expansion factors, e.g. 1.0,1.5,2.0")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--temperature", c.labeler.temperature, "softmax temperature for confidences")->capture_default_str();
  app->add_option("--nms-iou", c.labeler.nms_iou, "IoU threshold of the final NMS")->capture_default_str();
  app->add_option("--point-cap", c.point_cap, "maximum points kept per scene")->capture_default_str();
  app->add_option("--frames", c.max_frames, "frames sampled uniformly per scene (0 = all)")->capture_default_str();
  app->add_option("--seed", c.seed, "seed for point subsampling")->capture_default_str();
  app->add_option("--provider", c.provider, "fake[:seed] | cmd:<argv> | tcp:<host>:<port>")->capture_default_str();
  app->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
}

Vocabulary pick_vocabulary(const std::string& vocab_path, const Scene& scene) {
  if (!vocab_path.empty()) return load_vocabulary(vocab_path);
  if (scene.vocabulary) return *scene.vocabulary;
  throw ConfigError("no vocabulary: pass --vocab or add one to the scene manifest");
}

std::vector<Detection> label_boxes(const std::vector<Box3D>& boxes, const Scene& scene, const std::string& vocab_path,
                                   const RunConfig& config) {
  Vocabulary vocab = pick_vocabulary(vocab_path, scene);
  if (boxes.empty()) return {};
  auto provider = make_provider(config.provider);
  resolve_text_embeddings(vocab, *provider);
  return label_detections(boxes, scene, *provider, vocab, config.labeler);
}

// --- eval inputs -----------------------------------------------------------

struct GroundTruthFile {
  std::vector<std::string> classes;
  GroundTruthSet scenes;
};

GroundTruthFile read_ground_truth(const fs::path& path) {
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  GroundTruthFile gt;
  try {
    gt.classes = root.at("classes").get<std::vector<std::string>>();
    for (const auto& [scene, boxes] : root.at("scenes").items()) {
      auto& list = gt.scenes[scene];
      for (const auto& b : boxes) {
        const auto c = b.at("center").get<std::vector<double>>();
        const auto s = b.at("size").get<std::vector<double>>();
        if (c.size() != 3 || s.size() != 3) throw InputError("center/size need 3 values");
        GroundTruthBox g;
        g.box = {Vec3(c[0], c[1], c[2]), Vec3(s[0], s[1], s[2])};
        if (!(g.box.size.array() > 0.0).all()) throw InputError("ground-truth box with non-positive size");
        g.class_id = b.at("class_id").get<int>();
        list.push_back(g);
      }
    }
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": ground truth schema: " + e.what());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return gt;
}

std::vector<ScoredBox> to_scored(const std::vector<Detection>& dets, const std::vector<std::string>& classes,
                                 bool class_agnostic, const std::string& where) {
  std::vector<ScoredBox> out;
  for (const auto& d : dets) {
    int cls = 0;
    if (!class_agnostic) {
      if (d.label == kUnknownLabel) continue;
      const auto it = std::find(classes.begin(), classes.end(), d.label);
      if (it == classes.end()) throw InputError(where + ": label '" + d.label + "' is not a ground-truth class");
      cls = static_cast<int>(it - classes.begin());
    }
    out.push_back({d.box, cls, d.score});
  }
  return out;
}

PredictionSet read_predictions(const fs::path& path, const GroundTruthFile& gt, bool class_agnostic) {
  PredictionSet preds;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.path().extension() == ".json" && e.path().filename().string().find(".meta.") == std::string::npos) {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      preds[f.stem().string()] = to_scored(read_detections(f), gt.classes, class_agnostic, f.string());
    }
    return preds;
  }
  json root;
  try {
    root = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  if (root.is_array()) {
    if (gt.scenes.size() != 1) {
      throw InputError(path.string() + ": a bare detections array needs ground truth with exactly one scene");
    }
    preds[gt.scenes.begin()->first] =
        to_scored(parse_detections(root.dump(), path.string()), gt.classes, class_agnostic, path.string());
    return preds;
  }
  if (!root.is_object()) throw InputError(path.string() + ": expected detections array or {scene_id: detections}");
  for (const auto& [scene, dets] : root.items()) {
    preds[scene] = to_scored(parse_detections(dets.dump(), path.string() + "[" + scene + "]"), gt.classes,
                             class_agnostic, path.string());
  }
  return preds;
}

std::vector<fs::path> find_scene_manifests(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("scene directory not found: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) out.push_back(e.path() / "manifest.json");
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no scenes (subdirectories with manifest.json) in " + dir.string());
  return out;
}

void require_existing(const std::string& path, const char* what) {
  if (path.empty()) throw InputError(std::string("missing ") + what);
  if (!fs::exists(path)) throw InputError(std::string(what) + " not found: " + path);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return kExitInput;
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Provider: return kExitProvider;
    default: return kExitInternal;
  }
}

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"vcdet: training-free open-vocabulary 3D box detection from posed RGB-D masks"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  RunConfig config;
  std::string scene_path, out_path, boxes_path, vocab_path;

  auto* detect = app.add_subcommand("detect", "class-agnostic 3D boxes from a scene");
  detect->add_option("--scene", scene_path, "scene manifest")->required();
  detect->add_option("--out", out_path, "boxes JSON to write")->required();
  add_run_options(detect, config);

  auto* label = app.add_subcommand("label", "attach open-vocabulary labels to boxes");
  label->add_option("--scene", scene_path, "scene manifest")->required();
  label->add_option("--boxes", boxes_path, "boxes JSON (detections schema)")->required();
  label->add_option("--vocab", vocab_path, "vocabulary JSON (defaults to the manifest's)");
  label->add_option("--out", out_path, "detections JSON to write")->required();
  add_run_options(label, config);

  auto* pipeline = app.add_subcommand("pipeline", "detect + label");
  pipeline->add_option("--scene", scene_path, "scene manifest")->required();
  pipeline->add_option("--vocab", vocab_path, "vocabulary JSON (defaults to the manifest's)");
  pipeline->add_option("--out", out_path, "detections JSON to write")->required();
  add_run_options(pipeline, config);

  std::string preds_path, gt_path, protocol = "map";
  std::vector<double> ious{0.25, 0.5};
  double conf = -1.0;
  auto* eval = app.add_subcommand("eval", "score detections against ground truth");
  eval->add_option("--preds", preds_path, "detections: file, {scene: [...]} or directory of per-scene files")
      ->required();
  eval->add_option("--gt", gt_path, "ground truth JSON {classes, scenes}")->required();
  eval->add_option("--protocol", protocol, "map | binary")
      ->check(CLI::IsMember({"map", "binary"}))
      ->capture_default_str();
  eval->add_option("--iou", ious, "IoU thresholds, e.g. 0.25,0.5")->delimiter(',')->capture_default_str();
  eval->add_option("--conf", conf, "confidence threshold (required for --protocol binary)");
  eval->add_option("--out", out_path, "report JSON (stdout when omitted)");

  std::string scene_dir;
  auto* export_pseudo = app.add_subcommand("export-pseudo", "class-agnostic pseudo-labels for every scene in a directory");
  export_pseudo->add_option("--scene-dir", scene_dir, "directory of scene subdirectories")->required();
  export_pseudo->add_option("--out", out_path, "output directory")->required();
  add_run_options(export_pseudo, config);

  std::string synth_kind = "three";
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "write a synthetic test scene");
  synth->add_option("--out", out_path, "output directory")->required();
  synth->add_option("--kind", synth_kind, "three | micro")->check(CLI::IsMember({"three", "micro"}))->capture_default_str();
  synth->add_option("--seed", synth_seed, "seed for --kind micro")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (detect->parsed() || label->parsed() || pipeline->parsed() || export_pseudo->parsed()) config.finalize();

    if (detect->parsed() || pipeline->parsed()) {
      require_existing(scene_path, "scene manifest");
      const Scene scene = load_scene(scene_path, config.load_options());
      const auto boxes = detect_class_agnostic(scene, config.merge);
      json inputs{{"scene", scene_digests(scene_path)}};
      if (detect->parsed()) {
        write_pseudo_labels(out_path, boxes, scene.id);
        write_metadata(out_path, "detect", config, inputs);
        err << "detect: " << boxes.size() << " boxes -> " << out_path << "\n";
        return kExitOk;
      }
      const auto dets = label_boxes(boxes, scene, vocab_path, config);
      if (!vocab_path.empty()) inputs["vocab"] = hex64(digest_file(vocab_path));
      write_detections(out_path, dets);
      write_metadata(out_path, "pipeline", config, inputs);
      err << "pipeline: " << boxes.size() << " boxes, " << dets.size() << " detections -> " << out_path << "\n";
      return kExitOk;
    }

    if (label->parsed()) {
      require_existing(scene_path, "scene manifest");
      require_existing(boxes_path, "boxes file");
      const Scene scene = load_scene(scene_path, config.load_options());
      std::vector<Box3D> boxes;
      for (const auto& d : read_detections(boxes_path)) boxes.push_back(d.box);
      const auto dets = label_boxes(boxes, scene, vocab_path, config);
      json inputs{{"scene", scene_digests(scene_path)}, {"boxes", hex64(digest_file(boxes_path))}};
      if (!vocab_path.empty()) inputs["vocab"] = hex64(digest_file(vocab_path));
      write_detections(out_path, dets);
      write_metadata(out_path, "label", config, inputs);
      err << "label: " << dets.size() << " detections -> " << out_path << "\n";
      return kExitOk;
    }

    if (eval->parsed()) {
      require_existing(preds_path, "predictions");
      require_existing(gt_path, "ground truth");
      const bool binary = protocol == "binary";
      if (binary && conf < 0.0) throw ConfigError("--conf is required for --protocol binary");
      if (ious.empty()) throw ConfigError("--iou needs at least one threshold");
      for (double t : ious) {
        if (!(t > 0.0 && t <= 1.0)) throw ConfigError("IoU thresholds must be in (0, 1]");
      }
      const GroundTruthFile gt = read_ground_truth(gt_path);
      const PredictionSet preds = read_predictions(preds_path, gt, binary);
      if (const auto bad = scene_id_mismatches(preds, gt.scenes); !bad.empty()) {
        std::string msg = "scene id mismatch:";
        for (const auto& b : bad) msg += "\n  " + b;
        throw InputError(msg);
      }
      std::string report_json, table;
      if (binary) {
        nlohmann::ordered_json j;
        j["protocol"] = "binary";
        j["conf"] = conf;
        j["results"] = nlohmann::ordered_json::array();
        table = "IoU     precision  recall   TP     kept   GT\n";
        for (double t : ious) {
          const auto pr = evaluate_pr_binary(preds, gt.scenes, t, conf);
          j["results"].push_back({{"iou", t},
                                  {"precision", pr.precision},
                                  {"recall", pr.recall},
                                  {"true_positives", pr.true_positives},
                                  {"kept", pr.kept},
                                  {"num_gt", pr.num_gt}});
          char row[160];
          std::snprintf(row, sizeof row, "%-7g %-10.4f %-8.4f %-6zu %-6zu %zu\n", t, pr.precision, pr.recall,
                        pr.true_positives, pr.kept, pr.num_gt);
          table += row;
        }
        report_json = j.dump(2) + "\n";
      } else {
        const EvalReport report = evaluate_map(preds, gt.scenes, gt.classes, ious);
        report_json = report.to_json();
        table = report.to_table();
      }
      if (out_path.empty()) {
        out << report_json;
        err << table;
      } else {
        write_text_file(out_path, report_json);
        out << table;
      }
      return kExitOk;
    }

    if (export_pseudo->parsed()) {
      const auto manifests = find_scene_manifests(scene_dir);
      fs::create_directories(out_path);
      // Scenes run in parallel; each scene is single-threaded inside.
      RunConfig per_scene = config;
      per_scene.merge.workers = 1;
      std::vector<std::size_t> counts(manifests.size());
      std::vector<json> digests(manifests.size());
      std::vector<std::string> ids(manifests.size());
      parallel_for(manifests.size(), config.jobs, [&](std::size_t i) {
        const Scene scene = load_scene(manifests[i], per_scene.load_options());
        const auto boxes = detect_class_agnostic(scene, per_scene.merge);
        write_pseudo_labels(fs::path(out_path) / (scene.id + ".json"), boxes, scene.id);
        counts[i] = boxes.size();
        digests[i] = scene_digests(manifests[i]);
        ids[i] = scene.id;
      });
      json inputs = json::object();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (inputs.contains(ids[i])) throw InputError("duplicate scene id '" + ids[i] + "' in " + scene_dir);
        inputs[ids[i]] = digests[i];
        err << "export-pseudo: " << ids[i] << ": " << counts[i] << " boxes\n";
      }
      write_metadata(fs::path(out_path) / "run", "export-pseudo", config, inputs);
      return kExitOk;
    }

    if (synth->parsed()) {
      const SyntheticSpec spec = synth_kind == "three" ? three_cuboid_spec() : random_micro_spec(synth_seed, 6, 4);
      const auto manifest = write_synthetic(render_synthetic(spec), out_path);
      out << manifest.string() << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.push_back("vcdet");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace vcdet::cli
