#include "dmae/cli/app.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "dmae/constellation/image_io.hpp"
#include "dmae/errors.hpp"
#include "dmae/eval/evaluate.hpp"
#include "dmae/model/gradcheck.hpp"
#include "dmae/model/network.hpp"
#include "dmae/tensor/checkpoint.hpp"
#include "dmae/version.hpp"
#include "json.hpp"

namespace dmae::cli {

namespace fs = std::filesystem;

fs::path out_root() {
  const char* env = std::getenv(kOutRootEnv);
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("runs");
}

fs::path data_root(const RunConfig& cfg) { return cfg.data.root.empty() ? out_root() / "data" : cfg.data.root; }

std::size_t split_count(const RunConfig& cfg, const std::string& split) {
  if (split == constellation::kPretrainSplit || split == constellation::kPretrainSignalSplit)
    return cfg.data.pretrain_count;
  if (split == constellation::kTrainSplit) return cfg.data.train_count;
  if (split == constellation::kTestSplit) return cfg.data.test_count;
  throw ConfigError("unknown split '" + split + "'");
}

std::unique_ptr<train::PairSource> open_split(const RunConfig& cfg, const std::string& split) {
  if (cfg.data_source == "memory")
    return std::make_unique<train::MemoryPairSource>(train::render_split(cfg.data, split, split_count(cfg, split)));
  const auto root = data_root(cfg);
  if (!fs::exists(root / "manifest.json"))
    throw IoError("no dataset at " + root.string() + "; run `dmae gen` first or set data.source=memory");
  return std::make_unique<train::DiskPairSource>(root, split);
}

namespace {

struct Common {
  std::string preset = "desk";
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--preset", c.preset, "Configuration preset (desk or paper)");
  cmd->add_option("-c,--config", c.config_path, "key=value configuration file");
  cmd->add_option("-s,--set", c.overrides, "Override a config key (key=value); repeatable");
  cmd->add_option("--seed", c.seed, "Master seed");
  cmd->add_option("-o,--out", c.out, "Run directory (default: $DMAE_OUT_ROOT/<command>-<config hash>)");
  cmd->add_option("overrides", c.overrides, "Extra key=value overrides");
}

RunConfig resolve(const Common& c) {
  std::vector<Assignment> overrides;
  for (const auto& o : c.overrides) overrides.push_back(parse_assignment(o));
  if (c.seed) overrides.emplace_back("seed", std::to_string(*c.seed));
  std::optional<fs::path> path;
  if (!c.config_path.empty()) path = c.config_path;
  return load_config(c.preset, path, overrides);
}

std::string text_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc | std::ios::binary);
    if (!os) throw IoError("cannot write " + tmp.string());
    os << content;
    if (!os) throw IoError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

// Creates the run directory with its config snapshot and run record.
fs::path prepare_run(const std::string& command, const Common& c, const RunConfig& cfg, int argc, char** argv) {
  const auto snap = snapshot(cfg);
  const fs::path dir = c.out.empty() ? out_root() / (command + "-" + text_hash(command + "\n" + snap).substr(0, 12))
                                     : fs::path(c.out);
  fs::create_directories(dir);
  write_atomic(dir / "config.txt", snap);
  nlohmann::json record = {{"command", command},
                           {"version", kVersion},
                           {"preset", cfg.preset},
                           {"seed", cfg.seed},
                           {"config_hash", text_hash(snap)},
                           {"argv", std::vector<std::string>(argv, argv + argc)}};
  write_atomic(dir / "run.json", record.dump(2) + "\n");
  return dir;
}

tensor::ParamStore<float> load_params(tensor::ParamStore<float> params, const fs::path& ckpt) {
  const auto missing = tensor::load_into(params, tensor::load_checkpoint(ckpt));
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += " " + m;
    throw IoError("checkpoint " + ckpt.string() + " lacks tensors:" + names);
  }
  return params;
}

int cmd_gen(const RunConfig& cfg, const fs::path& dir, bool dry_run) {
  nlohmann::json counts;
  std::vector<std::pair<std::string, std::size_t>> splits = {{constellation::kPretrainSplit, cfg.data.pretrain_count},
                                                             {constellation::kTrainSplit, cfg.data.train_count},
                                                             {constellation::kTestSplit, cfg.data.test_count}};
  if (cfg.data.signal_images) splits.emplace_back(constellation::kPretrainSignalSplit, cfg.data.pretrain_count);
  for (const auto& [name, count] : splits) {
    const auto plan = constellation::plan_split(cfg.data, name, count);
    std::vector<std::size_t> per_class(sigsynth::kAllSchemes.size(), 0);
    for (const auto& r : plan) ++per_class[r.label];
    counts[name] = {{"pairs", plan.size()}, {"per_class", per_class}};
  }
  auto data = cfg.data;
  data.root = data_root(cfg);
  nlohmann::json summary = {{"root", data.root.string()}, {"image_size", data.pair.render.image_size}, {"splits", counts}};
  if (!dry_run) {
    std::cerr << "generating dataset in " << data.root << "\n";
    constellation::gen_dataset(data);
  }
  summary["dry_run"] = dry_run;
  write_atomic(dir / "gen_summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_pretrain(RunConfig cfg, const fs::path& dir, const std::string& resume) {
  const auto data = open_split(cfg, constellation::kPretrainSplit);
  cfg.pretrain.out_dir = dir;
  cfg.pretrain.verbose = true;
  std::optional<fs::path> from;
  if (!resume.empty()) from = resume;
  const auto result = train::pretrain(cfg.pretrain, *data, from);
  std::cout << "checkpoint " << result.checkpoint->string() << "\n";
  return 0;
}

int cmd_finetune(RunConfig cfg, const fs::path& dir, const std::string& pretrained) {
  const auto data = open_split(cfg, constellation::kTrainSplit);
  const auto test = open_split(cfg, cfg.eval_split);
  cfg.finetune.out_dir = dir;
  cfg.finetune.verbose = true;
  std::optional<fs::path> from;
  if (!pretrained.empty()) from = pretrained;
  train::TrainHooks hooks;
  hooks.eval = test.get();
  const auto result = train::finetune(cfg.finetune, *data, from, hooks);
  std::cout << "checkpoint " << result.checkpoint->string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const fs::path& dir, const std::string& ckpt) {
  const auto params = load_params(model::init_finetune_params(cfg.model, 0), ckpt);
  const auto data = open_split(cfg, cfg.eval_split);
  const auto report = eval::evaluate_classifier(params, cfg.model, *data);
  write_atomic(dir / "eval_report.json", report.to_json().dump(2) + "\n");
  write_atomic(dir / "eval_report.txt", report.to_text());
  std::cout << report.to_text();
  return 0;
}

int cmd_denoise(RunConfig cfg, const fs::path& dir, const std::string& ckpt, std::optional<double> snr,
                std::size_t export_count) {
  const auto params = load_params(model::init_pretrain_params(cfg.model, 0), ckpt);
  std::unique_ptr<train::PairSource> data;
  if (snr) {
    cfg.data.snr_min = cfg.data.snr_max = *snr;
    data = std::make_unique<train::MemoryPairSource>(
        train::render_split(cfg.data, cfg.eval_split, split_count(cfg, cfg.eval_split)));
  } else {
    data = open_split(cfg, cfg.eval_split);
  }
  const auto denoiser = eval::model_denoiser(params, cfg.model, cfg.eval_mask_seed);
  const auto summary = eval::evaluate_denoising(denoiser, *data);
  if (export_count > 0) fs::create_directories(dir / "images");
  for (std::size_t i = 0; i < std::min(export_count, data->size()); ++i) {
    const auto s = data->get(i);
    const auto id = std::to_string(i);
    constellation::export_ppm(dir / "images" / (id + "_noisy.ppm"), s.noisy);
    constellation::export_ppm(dir / "images" / (id + "_clean.ppm"), s.clean);
    constellation::export_ppm(dir / "images" / (id + "_denoised.ppm"), denoiser(s.noisy, i));
  }
  write_atomic(dir / "denoise_report.json", summary.to_json().dump(2) + "\n");
  std::cout << summary.to_json().dump(2) << "\n";
  return 0;
}

int cmd_latents(const RunConfig& cfg, const fs::path& dir, const std::string& ckpt) {
  auto params = model::init_finetune_params(cfg.model, 0);
  const auto arrays = tensor::load_checkpoint(ckpt);
  const auto missing = tensor::load_into(params, arrays);
  for (const auto& m : missing)
    if (model::is_encoder_param(m)) throw IoError("checkpoint " + ckpt + " lacks encoder tensor " + m);
  const auto data = open_split(cfg, cfg.eval_split);
  const auto path = dir / "latents.csv";
  eval::export_latents(params, cfg.model, *data, cfg.latents_mask_ratio, cfg.eval_mask_seed, path);
  std::cout << "wrote " << data->size() << " rows to " << path.string() << "\n";
  return 0;
}

int cmd_ablate(const RunConfig& base, const fs::path& dir, const std::string& sweep) {
  const auto [key, list] = parse_assignment(sweep);
  const auto canonical = resolve_key(key);
  std::vector<std::string> values;
  std::stringstream ss(list);
  for (std::string v; std::getline(ss, v, ',');)
    if (!v.empty()) values.push_back(v);
  if (values.empty()) throw ConfigError("--sweep needs at least one value");

  const auto pre_data = open_split(base, constellation::kPretrainSplit);
  const auto train_data = open_split(base, constellation::kTrainSplit);
  const auto test_data = open_split(base, base.eval_split);

  std::string csv = canonical + ",pretrain_loss,finetune_accuracy,test_accuracy\n";
  std::cout << csv;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunConfig cfg = base;
    set_value(cfg, canonical, values[i]);
    cfg.sync();
    cfg.validate();
    const auto point = dir / ("point-" + std::to_string(i));
    write_atomic((fs::create_directories(point), point / "config.txt"), snapshot(cfg));
    cfg.pretrain.out_dir = point / "pretrain";
    cfg.finetune.out_dir = point / "finetune";
    const auto pre = train::pretrain(cfg.pretrain, *pre_data);
    const auto fine = train::finetune(cfg.finetune, *train_data, pre.checkpoint);
    const auto report = eval::evaluate_classifier(fine.params, cfg.model, *test_data);
    char row[256];
    std::snprintf(row, sizeof(row), "%s,%.6f,%.6f,%.6f\n", values[i].c_str(), pre.log.epochs.back().total,
                  fine.log.epochs.back().accuracy, report.accuracy());
    csv += row;
    std::cout << row << std::flush;
  }
  write_atomic(dir / "ablate.csv", csv);
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, double tol) {
  const auto report = model::gradcheck_pretrain(model::gradcheck_config(), cfg.pretrain.weights, cfg.seed);
  for (const auto& e : report.entries)
    std::printf("%-32s %6zu  rel %.3e  max_abs %.3e%s\n", e.name.c_str(), e.numel, e.rel_error, e.max_abs_error,
                e.zero_gradient ? "  (zero gradient)" : "");
  std::printf("max relative error %.3e (tolerance %.1e): %s\n", report.max_rel_error, tol,
              report.max_rel_error < tol ? "PASS" : "FAIL");
  return report.max_rel_error < tol ? 0 : 1;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"DenoMAE2.0 workbench: constellation datasets, pretraining, fine-tuning and evaluation"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common c;
  bool dry_run = false;
  std::string resume, pretrained, checkpoint, sweep;
  std::optional<double> snr;
  std::size_t export_count = 0;
  double tol = 1e-5;

  auto* gen = app.add_subcommand("gen", "Generate the paired constellation dataset");
  add_common(gen, c);
  gen->add_flag("--dry-run", dry_run, "Report split sizes without writing images");

  auto* pre = app.add_subcommand("pretrain", "Pretrain on noisy/clean pairs");
  add_common(pre, c);
  pre->add_option("--resume", resume, "Continue from a pretraining checkpoint");

  auto* fine = app.add_subcommand("finetune", "Fine-tune the encoder on scheme labels");
  add_common(fine, c);
  fine->add_option("--pretrained", pretrained, "Pretraining checkpoint (omit for random init)");

  auto* ev = app.add_subcommand("eval", "Evaluate a fine-tuned checkpoint");
  add_common(ev, c);
  ev->add_option("--checkpoint", checkpoint, "Fine-tuned checkpoint")->required();

  auto* den = app.add_subcommand("denoise", "Measure denoising quality of a pretrained checkpoint");
  add_common(den, c);
  den->add_option("--checkpoint", checkpoint, "Pretraining checkpoint")->required();
  den->add_option("--snr", snr, "Render the evaluation split in memory at this SNR (dB)");
  den->add_option("--export", export_count, "Write this many noisy/clean/denoised PPM triples");

  auto* lat = app.add_subcommand("export-latents", "Write mean-pooled encoder features as CSV");
  add_common(lat, c);
  lat->add_option("--checkpoint", checkpoint, "Checkpoint holding encoder tensors")->required();

  auto* abl = app.add_subcommand("ablate", "Pretrain + fine-tune + eval for each value of one key");
  add_common(abl, c);
  abl->add_option("--sweep", sweep, "key=v1,v2,...")->required();

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check of the pretraining loss");
  add_common(gc, c);
  gc->add_option("--tol", tol, "Relative error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  auto* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  RunConfig cfg;
  fs::path dir;
  try {
    cfg = resolve(c);
    if (name != "gradcheck") dir = prepare_run(name, c, cfg, argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n\n" << cmd->help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (name == "gen") return cmd_gen(cfg, dir, dry_run);
    if (name == "pretrain") return cmd_pretrain(cfg, dir, resume);
    if (name == "finetune") return cmd_finetune(cfg, dir, pretrained);
    if (name == "eval") return cmd_eval(cfg, dir, checkpoint);
    if (name == "denoise") return cmd_denoise(cfg, dir, checkpoint, snr, export_count);
    if (name == "export-latents") return cmd_latents(cfg, dir, checkpoint);
    if (name == "ablate") return cmd_ablate(cfg, dir, sweep);
    return cmd_gradcheck(cfg, tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dmae::cli
