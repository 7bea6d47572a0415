#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dmae::sigsynth {

// Class order matches the dataset class table (index 0 = 4ASK).
enum class Scheme { ask4, pam4, ask8, pam16, cpfsk, dqpsk, gfsk, gmsk, ook, oqpsk };

inline constexpr std::array<Scheme, 10> kAllSchemes = {Scheme::ask4,  Scheme::pam4,  Scheme::ask8, Scheme::pam16,
                                                       Scheme::cpfsk, Scheme::dqpsk, Scheme::gfsk, Scheme::gmsk,
                                                       Scheme::ook,   Scheme::oqpsk};

std::string_view scheme_name(Scheme scheme);
// Accepts the table names ("4ASK", "GMSK", ...), case-insensitive.
Scheme parse_scheme(std::string_view name);
std::size_t class_index(Scheme scheme);
Scheme scheme_from_index(std::size_t index);

using Sample = std::complex<double>;

struct IQSignal {
  std::vector<Sample> samples;
  double sample_rate = 200'000.0;
  Scheme scheme = Scheme::ask4;
  std::optional<double> snr_db;  // empty = clean
};

// Waveform parameters shared by all schemes.
struct SynthConfig {
  std::size_t samples_per_symbol = 8;
  double sample_rate = 200'000.0;
  // GMSK is synthesized at this length with gmsk_samples_per_symbol and
  // then resampled (in the phase domain) to the requested length.
  std::size_t gmsk_length = 8196;
  std::size_t gmsk_samples_per_symbol = 64;
  double gaussian_bt = 0.35;
  double cpfsk_mod_index = 0.5;
  double gfsk_mod_index = 1.0;
  double rrc_rolloff = 0.35;
  std::size_t rrc_span_symbols = 8;
};

enum class Pulse { rectangular, root_raised_cosine, cpm_rectangular, cpm_gaussian };

struct SchemeParams {
  std::vector<Sample> alphabet;  // unit average energy; empty for CPM schemes
  Pulse pulse = Pulse::rectangular;
  std::size_t samples_per_symbol = 8;
  double mod_index = 0.0;  // CPM only
  bool differential = false;
  bool offset_quadrature = false;
};

SchemeParams scheme_params(Scheme scheme, const SynthConfig& cfg = {});

// Unit-average-power clean baseband signal, deterministic in (scheme, n, seed).
IQSignal gen_clean(Scheme scheme, std::size_t n_samples, std::uint64_t seed, const SynthConfig& cfg = {});

// Complex AWGN with total variance P_signal * 10^(-snr_db / 10), split
// equally between I and Q. snr_db = +inf returns an exact copy.
IQSignal add_awgn(const IQSignal& signal, double snr_db, std::uint64_t seed);

// Linear interpolation on a uniform grid that maps first->first and
// last->last. Handles both decimation and upsampling.
IQSignal resample(const IQSignal& signal, std::size_t target_len);
std::vector<double> resample(std::span<const double> values, std::size_t target_len);

double mean_power(std::span<const Sample> samples);

// f32 interleaved I/Q, little-endian, plus "<path>.json" sidecar.
void export_raw_iq(const std::filesystem::path& path, const IQSignal& signal, std::uint64_t seed);

}  // namespace dmae::sigsynth
