#include "dmae/sigsynth/sigsynth.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "dmae/errors.hpp"
#include "dmae/rng.hpp"
#include "json.hpp"

namespace dmae::sigsynth {

namespace {

constexpr std::array<std::string_view, 10> kNames = {"4ASK",  "4PAM", "8ASK", "16PAM", "CPFSK",
                                                     "DQPSK", "GFSK", "GMSK", "OOK",   "OQPSK"};

std::vector<Sample> symmetric_levels(int m) {
  // {±1, ±3, ..., ±(m-1)} scaled to unit mean energy.
  std::vector<Sample> levels;
  double energy = 0.0;
  for (int i = 0; i < m; ++i) {
    const double a = 2.0 * i - (m - 1);
    levels.emplace_back(a, 0.0);
    energy += a * a;
  }
  const double s = 1.0 / std::sqrt(energy / m);
  for (auto& l : levels) l *= s;
  return levels;
}

double rrc_tap(double t, double beta) {
  // t in symbol periods.
  constexpr double pi = std::numbers::pi;
  if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / pi;
  if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
    return beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
  }
  const double num = std::sin(pi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(pi * t * (1.0 + beta));
  const double den = pi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

// Frequency pulse of a CPM scheme, sampled per sample, summing to one.
std::vector<double> frequency_pulse(Pulse pulse, std::size_t sps, double bt) {
  if (pulse == Pulse::cpm_rectangular) return std::vector<double>(sps, 1.0 / static_cast<double>(sps));
  const double sigma = std::sqrt(std::log(2.0)) / (2.0 * std::numbers::pi * bt) * static_cast<double>(sps);
  const auto half = static_cast<std::ptrdiff_t>(2 * sps);
  std::vector<double> kernel;
  for (std::ptrdiff_t j = -half; j <= half; ++j) {
    kernel.push_back(std::exp(-0.5 * static_cast<double>(j * j) / (sigma * sigma)));
  }
  std::vector<double> out(sps + kernel.size() - 1, 0.0);
  for (std::size_t r = 0; r < sps; ++r)
    for (std::size_t j = 0; j < kernel.size(); ++j) out[r + j] += kernel[j];
  double total = 0.0;
  for (double v : out) total += v;
  for (double& v : out) v /= total;
  return out;
}

// Unwrapped phase trajectory of binary CPM, length n.
std::vector<double> cpm_phase(std::size_t n, std::size_t sps, double mod_index, const std::vector<double>& pulse,
                              Rng& rng) {
  const std::size_t lead = pulse.size();  // extra symbols so the pulse tail settles
  const std::size_t n_sym = (n + lead) / sps + 2;
  std::vector<double> symbols(n_sym);
  for (auto& a : symbols) a = rng.below(2) == 0 ? -1.0 : 1.0;

  std::vector<double> freq(n_sym * sps + pulse.size(), 0.0);
  for (std::size_t k = 0; k < n_sym; ++k)
    for (std::size_t m = 0; m < pulse.size(); ++m) freq[k * sps + m] += symbols[k] * pulse[m];

  std::vector<double> phase(n);
  double phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    phase[i] = phi;
    phi += std::numbers::pi * mod_index * freq[i + lead];
  }
  return phase;
}

void normalize_power(std::vector<Sample>& s) {
  const double p = mean_power(s);
  if (p <= 0.0) return;
  const double inv = 1.0 / std::sqrt(p);
  for (auto& v : s) v *= inv;
}

}  // namespace

std::string_view scheme_name(Scheme scheme) { return kNames[class_index(scheme)]; }

Scheme parse_scheme(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == upper) return kAllSchemes[i];
  }
  throw ConfigError("unknown modulation scheme: " + std::string(name));
}

std::size_t class_index(Scheme scheme) { return static_cast<std::size_t>(scheme); }

Scheme scheme_from_index(std::size_t index) {
  if (index >= kAllSchemes.size()) throw ConfigError("scheme index out of range: " + std::to_string(index));
  return kAllSchemes[index];
}

SchemeParams scheme_params(Scheme scheme, const SynthConfig& cfg) {
  SchemeParams p;
  p.samples_per_symbol = cfg.samples_per_symbol;
  switch (scheme) {
    case Scheme::ask4:
      p.alphabet = symmetric_levels(4);
      break;
    case Scheme::pam4:
      p.alphabet = symmetric_levels(4);
      p.pulse = Pulse::root_raised_cosine;
      break;
    case Scheme::ask8:
      p.alphabet = symmetric_levels(8);
      break;
    case Scheme::pam16:
      p.alphabet = symmetric_levels(16);
      p.pulse = Pulse::root_raised_cosine;
      break;
    case Scheme::ook:
      p.alphabet = {Sample(0.0, 0.0), Sample(std::sqrt(2.0), 0.0)};
      break;
    case Scheme::dqpsk:
      p.alphabet = {Sample(1.0, 0.0), Sample(0.0, 1.0), Sample(-1.0, 0.0), Sample(0.0, -1.0)};
      p.differential = true;
      break;
    case Scheme::oqpsk: {
      const double a = 1.0 / std::sqrt(2.0);
      p.alphabet = {Sample(a, a), Sample(-a, a), Sample(-a, -a), Sample(a, -a)};
      p.offset_quadrature = true;
      break;
    }
    case Scheme::cpfsk:
      p.pulse = Pulse::cpm_rectangular;
      p.mod_index = cfg.cpfsk_mod_index;
      break;
    case Scheme::gfsk:
      p.pulse = Pulse::cpm_gaussian;
      p.mod_index = cfg.gfsk_mod_index;
      break;
    case Scheme::gmsk:
      p.pulse = Pulse::cpm_gaussian;
      p.mod_index = 0.5;
      p.samples_per_symbol = cfg.gmsk_samples_per_symbol;
      break;
  }
  return p;
}

IQSignal gen_clean(Scheme scheme, std::size_t n_samples, std::uint64_t seed, const SynthConfig& cfg) {
  if (n_samples < 2) throw ConfigError("gen_clean: need at least 2 samples");
  if (cfg.samples_per_symbol == 0 || cfg.gmsk_samples_per_symbol == 0) {
    throw ConfigError("gen_clean: samples per symbol must be positive");
  }
  const SchemeParams params = scheme_params(scheme, cfg);
  const std::size_t sps = params.samples_per_symbol;
  Rng rng(seed);
  IQSignal out;
  out.scheme = scheme;
  out.sample_rate = cfg.sample_rate;
  out.samples.resize(n_samples);

  switch (params.pulse) {
    case Pulse::cpm_rectangular:
    case Pulse::cpm_gaussian: {
      const std::size_t native = scheme == Scheme::gmsk ? cfg.gmsk_length : n_samples;
      auto phase = cpm_phase(native, sps, params.mod_index, frequency_pulse(params.pulse, sps, cfg.gaussian_bt), rng);
      // Resampling the phase keeps the envelope exactly constant.
      if (native != n_samples) phase = resample(phase, n_samples);
      for (std::size_t i = 0; i < n_samples; ++i) out.samples[i] = std::polar(1.0, phase[i]);
      break;
    }
    case Pulse::root_raised_cosine: {
      const std::size_t span = cfg.rrc_span_symbols;
      const std::size_t half = span * sps / 2;
      const std::size_t skip = span / 2;  // symbols consumed before the first output sample
      const std::size_t n_sym = n_samples / sps + span + 2;
      std::vector<double> symbols(n_sym);
      for (auto& a : symbols) a = params.alphabet[rng.below(params.alphabet.size())].real();
      std::vector<double> taps(2 * half + 1);
      for (std::size_t m = 0; m < taps.size(); ++m) {
        const double off = static_cast<double>(m) - static_cast<double>(half);
        taps[m] = rrc_tap(off / static_cast<double>(sps), cfg.rrc_rolloff);
      }
      for (std::size_t i = 0; i < n_samples; ++i) {
        const auto t = static_cast<std::ptrdiff_t>(i + skip * sps);
        double acc = 0.0;
        for (std::size_t k = 0; k < n_sym; ++k) {
          const std::ptrdiff_t off = t - static_cast<std::ptrdiff_t>(k * sps);
          if (std::abs(off) > static_cast<std::ptrdiff_t>(half)) continue;
          acc += symbols[k] * taps[static_cast<std::size_t>(off + static_cast<std::ptrdiff_t>(half))];
        }
        out.samples[i] = Sample(acc, 0.0);
      }
      break;
    }
    case Pulse::rectangular: {
      const std::size_t n_sym = n_samples / sps + 2;
      std::vector<Sample> symbols(n_sym);
      for (auto& s : symbols) s = params.alphabet[rng.below(params.alphabet.size())];
      if (params.differential) {
        Sample ref(1.0, 0.0);
        for (auto& s : symbols) {
          ref *= s;
          s = ref;
        }
      }
      for (std::size_t i = 0; i < n_samples; ++i) {
        const Sample& s = symbols[i / sps];
        if (params.offset_quadrature) {
          // Q rail lags I by half a symbol.
          const Sample& q = symbols[(i + sps / 2) / sps];
          out.samples[i] = Sample(s.real(), q.imag());
        } else {
          out.samples[i] = s;
        }
      }
      break;
    }
  }
  normalize_power(out.samples);
  return out;
}

IQSignal add_awgn(const IQSignal& signal, double snr_db, std::uint64_t seed) {
  IQSignal out = signal;
  out.snr_db = snr_db;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  const double p = mean_power(signal.samples);
  if (!(p > 0.0)) throw ConfigError("add_awgn: signal power must be positive");
  const double variance = p * std::pow(10.0, -snr_db / 10.0);
  const double sigma = std::sqrt(variance / 2.0);
  Rng rng(seed);
  for (auto& s : out.samples) {
    const double ni = rng.normal();
    const double nq = rng.normal();
    s += Sample(sigma * ni, sigma * nq);
  }
  return out;
}

std::vector<double> resample(std::span<const double> values, std::size_t target_len) {
  if (target_len < 2) throw ConfigError("resample: target length must be >= 2");
  if (values.size() < 2) throw ConfigError("resample: source length must be >= 2");
  const std::size_t n = values.size();
  std::vector<double> out(target_len);
  const double step = static_cast<double>(n - 1) / static_cast<double>(target_len - 1);
  for (std::size_t i = 0; i < target_len; ++i) {
    const double t = static_cast<double>(i) * step;
    auto idx = static_cast<std::size_t>(t);
    if (idx >= n - 1) {
      out[i] = values[n - 1];
      continue;
    }
    const double frac = t - static_cast<double>(idx);
    out[i] = values[idx] + frac * (values[idx + 1] - values[idx]);
  }
  return out;
}

IQSignal resample(const IQSignal& signal, std::size_t target_len) {
  std::vector<double> re(signal.samples.size());
  std::vector<double> im(signal.samples.size());
  for (std::size_t i = 0; i < signal.samples.size(); ++i) {
    re[i] = signal.samples[i].real();
    im[i] = signal.samples[i].imag();
  }
  const auto r = resample(re, target_len);
  const auto q = resample(im, target_len);
  IQSignal out = signal;
  out.samples.resize(target_len);
  for (std::size_t i = 0; i < target_len; ++i) out.samples[i] = Sample(r[i], q[i]);
  return out;
}

double mean_power(std::span<const Sample> samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += std::norm(s);
  return acc / static_cast<double>(samples.size());
}

void export_raw_iq(const std::filesystem::path& path, const IQSignal& signal, std::uint64_t seed) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::string buf;
  buf.reserve(signal.samples.size() * 8);
  auto put = [&](float v) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  };
  for (const auto& s : signal.samples) {
    put(static_cast<float>(s.real()));
    put(static_cast<float>(s.imag()));
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  nlohmann::json meta;
  meta["scheme"] = std::string(scheme_name(signal.scheme));
  meta["snr_db"] = signal.snr_db ? nlohmann::json(*signal.snr_db) : nlohmann::json(nullptr);
  meta["seed"] = seed;
  meta["length"] = signal.samples.size();
  meta["sample_rate"] = signal.sample_rate;
  auto sidecar = path;
  sidecar += ".json";
  std::ofstream js(sidecar, std::ios::trunc);
  if (!js) throw IoError("cannot write " + sidecar.string());
  js << meta.dump(2) << "\n";
}

}  // namespace dmae::sigsynth
