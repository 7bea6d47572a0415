#include "dmae/constellation/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dmae/constellation/image_io.hpp"
#include "dmae/errors.hpp"
#include "dmae/rng.hpp"
#include "json.hpp"

namespace dmae::constellation {

namespace {

std::uint64_t split_tag(const std::string& split) {
  // FNV-1a; stable across platforms.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : split) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sample_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%06zu", i);
  return buf;
}

nlohmann::json config_json(const DatasetConfig& cfg) {
  const auto& r = cfg.pair.render;
  const auto& s = cfg.pair.synth;
  return {
      {"master_seed", cfg.master_seed},
      {"snr_min", cfg.snr_min},
      {"snr_max", cfg.snr_max},
      {"signal_length", cfg.pair.signal_length},
      {"render",
       {{"plane_extent", r.plane_extent},
        {"image_size", r.image_size},
        {"alphas", r.alphas},
        {"neighborhood_radius", r.neighborhood_radius}}},
      {"synth",
       {{"samples_per_symbol", s.samples_per_symbol},
        {"sample_rate", s.sample_rate},
        {"gmsk_length", s.gmsk_length},
        {"gaussian_bt", s.gaussian_bt},
        {"cpfsk_mod_index", s.cpfsk_mod_index},
        {"gfsk_mod_index", s.gfsk_mod_index}}},
  };
}

}  // namespace

const std::vector<SampleRecord>& Manifest::split(const std::string& name) const {
  auto it = splits.find(name);
  if (it == splits.end()) throw IoError("dataset has no split '" + name + "'");
  return it->second;
}

std::vector<SampleRecord> plan_split(const DatasetConfig& cfg, const std::string& split, std::size_t count) {
  const std::size_t n_classes = sigsynth::kAllSchemes.size();
  if (cfg.snr_max < cfg.snr_min) throw ConfigError("snr_max must be >= snr_min");
  const bool continuous_snr = split == kPretrainSplit || split == kPretrainSignalSplit;
  const auto n_levels = static_cast<std::size_t>(std::floor(cfg.snr_max - cfg.snr_min)) + 1;
  const std::uint64_t tag = split_tag(split);

  std::vector<SampleRecord> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SampleRecord r;
    r.id = sample_id(i);
    r.split = split;
    r.label = i % n_classes;
    r.scheme = sigsynth::scheme_from_index(r.label);
    r.seed = derive_seed(cfg.master_seed, {tag, i});
    if (continuous_snr) {
      Rng rng(derive_seed(r.seed, {0x534E52ULL}));
      r.snr_db = rng.uniform(cfg.snr_min, cfg.snr_max);
    } else {
      r.snr_db = cfg.snr_min + static_cast<double>(i % n_levels);
    }
    r.noisy_path = split + "/noisy/" + r.id + ".dmimg";
    r.clean_path = split + "/clean/" + r.id + ".dmimg";
    out.push_back(std::move(r));
  }
  return out;
}

ImagePair render_record(const SampleRecord& record, const PairConfig& cfg) {
  if (record.split != kPretrainSignalSplit) return make_pair(record.scheme, record.snr_db, record.seed, cfg);
  const auto clean = sigsynth::gen_clean(record.scheme, cfg.signal_length, signal_seed(record.seed), cfg.synth);
  const auto noisy = sigsynth::add_awgn(clean, record.snr_db, noise_seed(record.seed));
  const std::size_t size = cfg.render.image_size;
  ImagePair pair;
  pair.label = record.label;
  pair.clean = {signal_to_image(clean, size), Variant::clean, record.scheme, std::nullopt};
  pair.noisy = {signal_to_image(noisy, size), Variant::noisy, record.scheme, record.snr_db};
  return pair;
}

Manifest gen_dataset(const DatasetConfig& cfg) {
  cfg.pair.render.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.root, ec);
  if (ec) throw IoError("cannot create dataset directory " + cfg.root.string() + ": " + ec.message());

  Manifest manifest;
  manifest.root = cfg.root;
  manifest.image_size = cfg.pair.render.image_size;
  std::vector<std::pair<std::string, std::size_t>> splits = {
      {kPretrainSplit, cfg.pretrain_count}, {kTrainSplit, cfg.train_count}, {kTestSplit, cfg.test_count}};
  if (cfg.signal_images) splits.emplace_back(kPretrainSignalSplit, cfg.pretrain_count);

  nlohmann::json doc;
  doc["format"] = "dmae-dataset";
  doc["version"] = 1;
  doc["image_size"] = manifest.image_size;
  doc["config"] = config_json(cfg);
  doc["classes"] = nlohmann::json::array();
  for (auto s : sigsynth::kAllSchemes) doc["classes"].push_back(std::string(sigsynth::scheme_name(s)));

  for (const auto& [name, count] : splits) {
    auto records = plan_split(cfg, name, count);
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& r : records) {
      const auto pair = render_record(r, cfg.pair);
      write_dmimg(cfg.root / r.noisy_path, pair.noisy.image);
      write_dmimg(cfg.root / r.clean_path, pair.clean.image);
      entries.push_back({{"id", r.id},
                         {"scheme", std::string(sigsynth::scheme_name(r.scheme))},
                         {"label", r.label},
                         {"snr_db", r.snr_db},
                         {"seed", r.seed},
                         {"noisy", r.noisy_path},
                         {"clean", r.clean_path}});
    }
    doc["splits"][name] = std::move(entries);
    manifest.splits[name] = std::move(records);
  }

  const auto path = cfg.root / "manifest.json";
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << doc.dump(1) << "\n";
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& root) {
  const auto path = root / "manifest.json";
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset manifest " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  m.root = root;
  m.image_size = doc.at("image_size").get<std::size_t>();
  for (const auto& [name, entries] : doc.at("splits").items()) {
    auto& out = m.splits[name];
    for (const auto& e : entries) {
      SampleRecord r;
      r.id = e.at("id").get<std::string>();
      r.split = name;
      r.scheme = sigsynth::parse_scheme(e.at("scheme").get<std::string>());
      r.label = e.at("label").get<std::size_t>();
      r.snr_db = e.at("snr_db").get<double>();
      r.seed = e.at("seed").get<std::uint64_t>();
      r.noisy_path = e.at("noisy").get<std::string>();
      r.clean_path = e.at("clean").get<std::string>();
      out.push_back(std::move(r));
    }
  }
  return m;
}

}  // namespace dmae::constellation
