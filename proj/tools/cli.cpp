#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "xview/config.hpp"
#include "xview/dataset.hpp"
#include "xview/errors.hpp"
#include "xview/grounder.hpp"
#include "xview/image.hpp"
#include "xview/metrics.hpp"
#include "xview/trainer.hpp"

namespace fs = std::filesystem;

namespace xview::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) throw UsageError("empty entry in list '" + s + "'");
    out.push_back(item);
  }
  return out;
}

// Training options shared by the flag parser and the sweep expansion.
struct TrainArgs {
  std::string manifest;
  std::string out;
  std::string config;
  std::string resume;
  std::map<std::string, std::string> overrides;  // config key -> flag value
  // Sweepable keys hold comma-separated lists.
  std::map<std::string, std::string> sweeps;
};

void write_run_config(const fs::path& dir, const TrainConfig& config, const std::string& manifest) {
  std::ofstream f(dir / "run_config.txt");
  if (!f) throw IoError("cannot write " + (dir / "run_config.txt").string());
  f << "# effective configuration; manifest: " << manifest << '\n';
  write_key_values(f, config.to_key_values());
  if (!f) throw IoError("failed writing run_config.txt");
}

int cmd_synth(const fs::path& out_dir, const SyntheticSpec& spec, std::ostream& out) {
  const fs::path manifest = generate_synthetic(out_dir, spec);
  out << "wrote " << manifest.string() << '\n';
  return kExitOk;
}

int cmd_annotate(const std::string& annotations, const fs::path& out_dir, std::optional<double> sigma,
                 std::ostream& out) {
  const auto anns = load_annotations(annotations);
  fs::create_directories(out_dir);
  for (const auto& a : anns) {
    const double s = sigma ? *sigma : default_sigma(a.width, a.height);
    const GroundingHeatmap h = points_to_heatmap(a, s);
    const fs::path path = out_dir / (a.image_id + ".ftm");
    save_ftm(path, h.map);
    write_pgm(fs::path(path).replace_extension(".pgm"), h.map);
  }
  out << "wrote " << anns.size() << " heatmaps to " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  KeyValues base{{"profile", "toy"}};
  if (!args.config.empty()) {
    for (const auto& [k, v] : load_key_values(args.config)) base[k] = v;
  }
  for (const auto& [k, v] : args.overrides) base[k] = v;

  // Expand sweeps into the cartesian product, in a fixed key order.
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  bool sweeping = false;
  for (const auto& [key, list] : args.sweeps) {
    auto values = split_list(list);
    sweeping = sweeping || values.size() > 1;
    axes.emplace_back(key, std::move(values));
  }
  std::vector<KeyValues> runs{base};
  std::vector<std::string> names{""};
  for (const auto& [key, values] : axes) {
    std::vector<KeyValues> next_runs;
    std::vector<std::string> next_names;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      for (const auto& v : values) {
        KeyValues kv = runs[i];
        kv[key] = v;
        next_runs.push_back(std::move(kv));
        next_names.push_back(names[i] + (names[i].empty() ? "" : "_") + key + "=" + v);
      }
    }
    runs = std::move(next_runs);
    names = std::move(next_names);
  }

  const Manifest manifest = load_manifest(args.manifest);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    TrainConfig config = TrainConfig::for_profile(Profile::kToy);
    config.apply(runs[i]);
    config.validate();
    const fs::path dir = sweeping ? fs::path(args.out) / names[i] : fs::path(args.out);
    fs::create_directories(dir);
    write_run_config(dir, config, args.manifest);
    TrainOptions opts;
    opts.out_dir = dir;
    if (!args.resume.empty()) opts.resume_from = args.resume;
    opts.progress = &err;
    const TrainResult r = train(manifest, config, opts);
    out << "checkpoint " << r.checkpoint.string() << '\n';
  }
  return kExitOk;
}

int cmd_ground(const std::string& checkpoint, const std::string& manifest_path, const std::string& image,
               const std::string& label, const std::string& split, const fs::path& out_dir, std::ostream& out) {
  const Model model = Model::from_archive(load_archive(checkpoint));
  fs::create_directories(out_dir);
  if (!image.empty() || !label.empty()) {
    if (image.empty() || label.empty()) throw UsageError("--image and --label must be given together");
    const Tensor img = image_to_tensor(read_png(image));
    const std::string id = fs::path(image).stem().string();
    const auto h = ground(model, img, model.class_index(label), id);
    out << "wrote " << write_heatmap(out_dir, h, label).string() << '\n';
    return kExitOk;
  }
  if (manifest_path.empty()) throw UsageError("ground needs --manifest, or --image with --label");
  const Split want = split == "train" ? Split::kTrain : Split::kTest;
  if (split != "train" && split != "test") throw UsageError("--split must be train or test");
  const Manifest manifest = load_manifest(manifest_path);
  std::size_t n = 0;
  for (const auto& r : manifest.records) {
    if (r.role != Role::kEgocentric || r.split != want) continue;
    const Tensor img = image_to_tensor(read_png(manifest.resolve(r.image_path)));
    write_heatmap(out_dir, ground(model, img, model.class_index(r.affordance), r.id), r.affordance);
    ++n;
  }
  out << "wrote " << n << " heatmaps to " << out_dir.string() << '\n';
  return kExitOk;
}

void print_summary(const std::vector<SliceStats>& stats, std::ostream& out) {
  for (const auto& s : stats) {
    if (s.slice != "overall") continue;
    if (s.metric == "UNIFORM_KLD") out << "uniform baseline KLD: " << s.mean << '\n';
    if (s.metric == "UNIFORM_SIM") out << "uniform baseline SIM: " << s.mean << '\n';
    if (s.metric == "HIT") out << "argmax hit rate: " << s.mean << '\n';
  }
}

int cmd_eval(const std::string& predictions, const std::string& manifest_path, const std::string& out_dir,
             std::ostream& out, std::ostream& err) {
  const MetricReport report = evaluate_set(predictions, load_manifest(manifest_path));
  write_report_table(out, report.stats);
  print_summary(report.stats, out);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "report.csv");
    write_report_csv(csv, report);
    std::ofstream rows(fs::path(out_dir) / "per_image.csv");
    write_per_image_csv(rows, report);
    if (!csv || !rows) throw IoError("failed writing report files under " + out_dir);
  }
  if (!report.missing.empty()) {
    err << report.missing.size() << " test images have no prediction:";
    for (const auto& id : report.missing) err << ' ' << id;
    err << '\n';
    return kExitDomain;
  }
  return kExitOk;
}

int cmd_report(const std::string& report_path, std::ostream& out) {
  std::ifstream f(report_path);
  if (!f) throw IoError("cannot open " + report_path);
  const auto stats = read_report_csv(f);
  out << "Overall\n";
  write_report_table(out, stats, {"overall", "seen", "unseen"});
  out << "\nPer class\n";
  write_report_table(out, stats, {"class:"});
  out << "\nPer attribute\n";
  write_report_table(out, stats, {"Big", "Middle", "Small", "BC", "NCP", "MO"});
  out << "\nLong tail\n";
  write_report_table(out, stats, {"Head", "Tail"});
  out << '\n';
  print_summary(stats, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-view affordance grounding: synthetic data, training, grounding and evaluation"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the synthetic affordance dataset");
  std::string synth_out;
  SyntheticSpec spec;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
  synth->add_option("--classes", spec.n_classes, "Number of affordance classes")->capture_default_str();
  synth->add_option("--n-ego", spec.n_ego, "Egocentric images per class")->capture_default_str();
  synth->add_option("--n-exo-per-class", spec.n_exo_per_class, "Exocentric images per class")->capture_default_str();
  synth->add_option("--size", spec.image_size, "Image side in pixels")->capture_default_str();

  // annotate
  auto* annotate = app.add_subcommand("annotate", "Render point annotations into ground-truth heatmaps");
  std::string ann_file, ann_out;
  std::optional<double> sigma;
  annotate->add_option("--annotations", ann_file, "Annotation file (JSON lines)")->required();
  annotate->add_option("--out", ann_out, "Output directory")->required();
  annotate->add_option("--sigma", sigma, "Gaussian width in pixels (default 5% of the larger side)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a manifest");
  TrainArgs targs;
  train_cmd->add_option("--manifest", targs.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", targs.out, "Output directory")->required();
  train_cmd->add_option("--config", targs.config, "key=value config file");
  train_cmd->add_option("--resume", targs.resume, "Continue from a checkpoint");
  const std::vector<std::pair<std::string, std::string>> override_flags{
      {"--profile", "profile"},         {"--seed", "seed"},       {"--epochs", "epochs"},
      {"--lr", "lr"},                   {"--batch-size", "batch_size"}, {"--nmf-iters", "nmf_iters"},
      {"--lambda1", "lambda1"},         {"--lambda2", "lambda2"}, {"--lambda3", "lambda3"},
      {"--alpha", "alpha"}};
  std::map<std::string, std::string> flag_values;
  for (const auto& [flag, key] : override_flags) train_cmd->add_option(flag, flag_values[key]);
  const std::vector<std::pair<std::string, std::string>> sweep_flags{
      {"--temperature", "temperature"}, {"--channels", "channels"}, {"--rank", "rank"}, {"--n-exo", "n_exo"}};
  std::map<std::string, std::string> sweep_values;
  for (const auto& [flag, key] : sweep_flags)
    train_cmd->add_option(flag, sweep_values[key], "Value or comma-separated sweep");

  // ground
  auto* ground_cmd = app.add_subcommand("ground", "Write grounding heatmaps");
  std::string g_ckpt, g_manifest, g_image, g_label, g_out, g_split = "test";
  ground_cmd->add_option("--checkpoint", g_ckpt, "Trained checkpoint")->required();
  ground_cmd->add_option("--manifest", g_manifest, "Ground every egocentric record of --split");
  ground_cmd->add_option("--split", g_split, "train or test")->capture_default_str();
  ground_cmd->add_option("--image", g_image, "Single PNG image");
  ground_cmd->add_option("--label", g_label, "Affordance name for --image");
  ground_cmd->add_option("--out", g_out, "Output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score heatmaps against ground truth");
  std::string e_pred, e_manifest, e_out;
  eval_cmd->add_option("--predictions", e_pred, "Directory of predicted heatmaps")->required();
  eval_cmd->add_option("--manifest", e_manifest, "Dataset manifest")->required();
  eval_cmd->add_option("--out", e_out, "Directory for report.csv and per_image.csv");

  // report
  auto* report_cmd = app.add_subcommand("report", "Print tables from a saved report");
  std::string r_path;
  report_cmd->add_option("--report", r_path, "report.csv written by eval")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n' << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_out, spec, out);
    if (*annotate) return cmd_annotate(ann_file, ann_out, sigma, out);
    if (*train_cmd) {
      for (const auto& [key, value] : flag_values)
        if (!value.empty()) targs.overrides[key] = value;
      for (const auto& [key, value] : sweep_values)
        if (!value.empty()) targs.sweeps[key] = value;
      return cmd_train(targs, out, err);
    }
    if (*ground_cmd) return cmd_ground(g_ckpt, g_manifest, g_image, g_label, g_split, g_out, out);
    if (*eval_cmd) return cmd_eval(e_pred, e_manifest, e_out, out, err);
    if (*report_cmd) return cmd_report(r_path, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace xview::cli
