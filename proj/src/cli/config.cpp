#include "dmae/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dmae/errors.hpp"

namespace dmae::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void type_error(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got '" + value + "'");
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) type_error(key, v, "a non-negative integer");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) type_error(key, v, "a number");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  type_error(key, v, "a boolean (true/false)");
}

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string fmt(bool v) { return v ? "true" : "false"; }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Get>
Field size_field(Get access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) {
            access(c) = static_cast<std::size_t>(to_uint(k, v));
          },
          [access](const RunConfig& c) { return fmt(static_cast<std::uint64_t>(access(const_cast<RunConfig&>(c)))); }};
}

template <class Get>
Field u64_field(Get access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = to_uint(k, v); },
          [access](const RunConfig& c) { return fmt(static_cast<std::uint64_t>(access(const_cast<RunConfig&>(c)))); }};
}

template <class Get>
Field double_field(Get access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = to_double(k, v); },
          [access](const RunConfig& c) { return fmt(static_cast<double>(access(const_cast<RunConfig&>(c)))); }};
}

template <class Get>
Field bool_field(Get access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = to_bool(k, v); },
          [access](const RunConfig& c) { return fmt(static_cast<bool>(access(const_cast<RunConfig&>(c)))); }};
}

template <class Get>
Field string_field(Get access) {
  return {[access](RunConfig& c, const std::string&, const std::string& v) { access(c) = v; },
          [access](const RunConfig& c) { return std::string(access(const_cast<RunConfig&>(c))); }};
}

void add_train_fields(std::map<std::string, Field>& f, const std::string& ns, train::TrainConfig RunConfig::*tc) {
  f[ns + ".batch_size"] = size_field([tc](RunConfig& c) -> std::size_t& { return (c.*tc).batch_size; });
  f[ns + ".epochs"] = size_field([tc](RunConfig& c) -> std::size_t& { return (c.*tc).epochs; });
  f[ns + ".max_steps"] = size_field([tc](RunConfig& c) -> std::size_t& { return (c.*tc).max_steps; });
  f[ns + ".lr"] = double_field([tc](RunConfig& c) -> double& { return (c.*tc).lr; });
  f[ns + ".weight_decay"] = double_field([tc](RunConfig& c) -> double& { return (c.*tc).weight_decay; });
  f[ns + ".cosine_schedule"] = bool_field([tc](RunConfig& c) -> bool& { return (c.*tc).cosine_schedule; });
  f[ns + ".checkpoint_every"] = size_field([tc](RunConfig& c) -> std::size_t& { return (c.*tc).checkpoint_every; });
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> f;
    f["preset"] = string_field([](RunConfig& c) -> std::string& { return c.preset; });
    f["seed"] = u64_field([](RunConfig& c) -> std::uint64_t& { return c.seed; });

    f["data.root"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.data.root = v; },
                      [](const RunConfig& c) { return c.data.root.string(); }};
    f["data.source"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                          if (v != "disk" && v != "memory") type_error(k, v, "'disk' or 'memory'");
                          c.data_source = v;
                        },
                        [](const RunConfig& c) { return c.data_source; }};
    f["data.pretrain_count"] = size_field([](RunConfig& c) -> std::size_t& { return c.data.pretrain_count; });
    f["data.train_count"] = size_field([](RunConfig& c) -> std::size_t& { return c.data.train_count; });
    f["data.test_count"] = size_field([](RunConfig& c) -> std::size_t& { return c.data.test_count; });
    f["data.snr_min"] = double_field([](RunConfig& c) -> double& { return c.data.snr_min; });
    f["data.snr_max"] = double_field([](RunConfig& c) -> double& { return c.data.snr_max; });
    f["data.signal_images"] = bool_field([](RunConfig& c) -> bool& { return c.data.signal_images; });
    f["data.signal_length"] = size_field([](RunConfig& c) -> std::size_t& { return c.data.pair.signal_length; });

    f["render.plane_extent"] = double_field([](RunConfig& c) -> double& { return c.data.pair.render.plane_extent; });
    f["render.alpha0"] = double_field([](RunConfig& c) -> double& { return c.data.pair.render.alphas[0]; });
    f["render.alpha1"] = double_field([](RunConfig& c) -> double& { return c.data.pair.render.alphas[1]; });
    f["render.alpha2"] = double_field([](RunConfig& c) -> double& { return c.data.pair.render.alphas[2]; });
    f["render.neighborhood_radius"] =
        double_field([](RunConfig& c) -> double& { return c.data.pair.render.neighborhood_radius; });

    f["synth.samples_per_symbol"] =
        size_field([](RunConfig& c) -> std::size_t& { return c.data.pair.synth.samples_per_symbol; });
    f["synth.sample_rate"] = double_field([](RunConfig& c) -> double& { return c.data.pair.synth.sample_rate; });
    f["synth.gmsk_length"] = size_field([](RunConfig& c) -> std::size_t& { return c.data.pair.synth.gmsk_length; });
    f["synth.gaussian_bt"] = double_field([](RunConfig& c) -> double& { return c.data.pair.synth.gaussian_bt; });
    f["synth.cpfsk_mod_index"] = double_field([](RunConfig& c) -> double& { return c.data.pair.synth.cpfsk_mod_index; });
    f["synth.gfsk_mod_index"] = double_field([](RunConfig& c) -> double& { return c.data.pair.synth.gfsk_mod_index; });

    f["model.img_size"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.img_size; });
    f["model.patch_size"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.patch_size; });
    f["model.in_channels"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.in_channels; });
    f["model.enc_dim"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.enc_dim; });
    f["model.enc_depth"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.enc_depth; });
    f["model.enc_heads"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.enc_heads; });
    f["model.dec_dim"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.dec_dim; });
    f["model.dec_depth"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.dec_depth; });
    f["model.dec_heads"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.dec_heads; });
    f["model.mask_ratio"] = double_field([](RunConfig& c) -> double& { return c.model.mask_ratio; });
    f["model.cls_head_hidden"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.cls_head_hidden; });
    f["model.n_downstream_classes"] =
        size_field([](RunConfig& c) -> std::size_t& { return c.model.n_downstream_classes; });
    f["model.mlp_ratio"] = size_field([](RunConfig& c) -> std::size_t& { return c.model.mlp_ratio; });
    f["model.dropout"] = double_field([](RunConfig& c) -> double& { return c.model.dropout; });
    f["model.pos_embed"] = bool_field([](RunConfig& c) -> bool& { return c.model.pos_embed; });

    f["loss.lambda_rec"] = double_field([](RunConfig& c) -> double& { return c.pretrain.weights.lambda_rec; });
    f["loss.lambda_cls"] = double_field([](RunConfig& c) -> double& { return c.pretrain.weights.lambda_cls; });

    add_train_fields(f, "pretrain", &RunConfig::pretrain);
    f["pretrain.fixed_masks"] = bool_field([](RunConfig& c) -> bool& { return c.pretrain.fixed_masks; });
    add_train_fields(f, "finetune", &RunConfig::finetune);

    f["eval.split"] = string_field([](RunConfig& c) -> std::string& { return c.eval_split; });
    f["eval.mask_seed"] = u64_field([](RunConfig& c) -> std::uint64_t& { return c.eval_mask_seed; });
    f["latents.mask_ratio"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                                 if (v == "none" || v.empty()) {
                                   c.latents_mask_ratio.reset();
                                 } else {
                                   c.latents_mask_ratio = to_double(k, v);
                                 }
                               },
                               [](const RunConfig& c) {
                                 return c.latents_mask_ratio ? fmt(*c.latents_mask_ratio) : std::string("none");
                               }};
    return f;
  }();
  return table;
}

}  // namespace

void RunConfig::sync() {
  data.master_seed = seed;
  data.pair.render.image_size = model.img_size;
  pretrain.phase = train::Phase::pretrain;
  finetune.phase = train::Phase::finetune;
  pretrain.model = model;
  finetune.model = model;
  pretrain.master_seed = seed;
  finetune.master_seed = seed;
}

void RunConfig::validate() const {
  data.pair.render.validate();
  if (model.in_channels != 3) throw ConfigError("model.in_channels must be 3 for constellation images");
  if (latents_mask_ratio && (*latents_mask_ratio < 0.0 || *latents_mask_ratio >= 1.0))
    throw ConfigError("latents.mask_ratio must lie in [0, 1) or be 'none'");
  pretrain.validate();
  finetune.validate();
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  if (name == "desk") {
    c.model = model::ModelConfig::desk();
    c.data.pretrain_count = 1000;
    c.data.train_count = 1000;
    c.data.test_count = 100;
    c.pretrain = train::TrainConfig::pretrain_defaults();
    c.pretrain.batch_size = 32;
    c.pretrain.epochs = 30;
    c.pretrain.lr = 1e-3;
    c.pretrain.cosine_schedule = true;
    c.finetune = train::TrainConfig::finetune_defaults();
    c.finetune.batch_size = 32;
    c.finetune.epochs = 10;
    c.finetune.lr = 3e-4;
  } else if (name == "paper") {
    c.model = model::ModelConfig::paper();
    c.pretrain = train::TrainConfig::pretrain_defaults();
    c.finetune = train::TrainConfig::finetune_defaults();
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
  }
  c.sync();
  return c;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : fields()) keys.push_back(k);
  return keys;
}

std::string resolve_key(const std::string& key) {
  const auto& f = fields();
  if (f.contains(key)) return key;
  std::vector<std::string> hits;
  for (const auto& [k, _] : f)
    if (k.size() > key.size() && k.ends_with(key) && k[k.size() - key.size() - 1] == '.') hits.push_back(k);
  if (hits.size() == 1) return hits.front();
  if (hits.empty()) throw ConfigError("unknown config key '" + key + "'");
  std::string list;
  for (const auto& h : hits) list += " " + h;
  throw ConfigError("ambiguous config key '" + key + "': matches" + list);
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto k = resolve_key(key);
  fields().at(k).set(cfg, k, trim(value));
}

std::string get_value(const RunConfig& cfg, const std::string& key) {
  const auto k = resolve_key(key);
  return fields().at(k).get(cfg);
}

Assignment parse_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + text + "'");
  auto key = trim(text.substr(0, eq));
  if (key.empty()) throw ConfigError("empty key in '" + text + "'");
  return {key, trim(text.substr(eq + 1))};
}

std::vector<Assignment> parse_config_text(const std::string& text, const std::string& origin) {
  std::vector<Assignment> out;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      out.push_back(parse_assignment(line));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Assignment> read_config_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

RunConfig load_config(const std::string& preset, const std::optional<std::filesystem::path>& path,
                      const std::vector<Assignment>& overrides) {
  std::vector<Assignment> all;
  if (path) all = read_config_file(*path);
  all.insert(all.end(), overrides.begin(), overrides.end());

  std::string chosen = preset;
  for (const auto& [k, v] : all)
    if (resolve_key(k) == "preset") chosen = v;
  RunConfig cfg = preset_config(chosen);
  for (const auto& [k, v] : all) {
    if (resolve_key(k) == "preset") continue;
    set_value(cfg, k, v);
  }
  cfg.sync();
  cfg.validate();
  return cfg;
}

std::string snapshot(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace dmae::cli
