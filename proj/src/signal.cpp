#include "adbs/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>

#include "adbs/error.hpp"

namespace adbs {

namespace {

// FFTW planning is not thread-safe, execution with the new-array interface is.
// Plans are created once per length with FFTW_ESTIMATE | FFTW_UNALIGNED so the
// same codelets run regardless of buffer alignment.
fftw_plan r2c_plan(int n) {
  static std::mutex mutex;
  static std::map<int, fftw_plan> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<double> in(static_cast<std::size_t>(n));
  std::vector<fftw_complex> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan plan = fftw_plan_dft_r2c_1d(n, in.data(), out.data(),
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans.emplace(n, plan);
  return plan;
}

std::vector<double> make_taper(std::size_t n, Taper taper) {
  std::vector<double> w(n, 1.0);
  if (taper == Taper::kHann) {
    // Periodic Hann: integer-period tones leak into exactly two neighbours.
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n));
    }
  }
  return w;
}

}  // namespace

PsdEstimate estimate_psd(const SampledSignal& signal, Taper taper) {
  const std::size_t n = signal.samples.size();
  if (n < 2) throw InvalidInput("estimate_psd: signal needs at least 2 samples");
  if (!(signal.sample_rate > 0.0)) {
    throw InvalidInput("estimate_psd: sample_rate must be positive");
  }

  const std::vector<double> w = make_taper(n, taper);
  const double energy = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

  std::vector<double> tapered(n);
  for (std::size_t i = 0; i < n; ++i) tapered[i] = signal.samples[i] * w[i];

  const std::size_t bins = n / 2 + 1;
  std::vector<fftw_complex> spectrum(bins);
  fftw_execute_dft_r2c(r2c_plan(static_cast<int>(n)), tapered.data(), spectrum.data());

  PsdEstimate psd;
  psd.frequencies.resize(bins);
  psd.power.resize(bins);
  const double scale = 1.0 / (signal.sample_rate * energy);
  for (std::size_t k = 0; k < bins; ++k) {
    const double re = spectrum[k][0];
    const double im = spectrum[k][1];
    double p = (re * re + im * im) * scale;
    const bool nyquist = (n % 2 == 0) && (k == n / 2);
    if (k != 0 && !nyquist) p *= 2.0;
    psd.frequencies[k] = static_cast<double>(k) * signal.sample_rate / static_cast<double>(n);
    psd.power[k] = p;
  }
  return psd;
}

BandPower band_power(const PsdEstimate& psd, double low_hz, double high_hz) {
  if (psd.frequencies.size() != psd.power.size() || psd.frequencies.size() < 2) {
    throw InvalidInput("band_power: malformed PSD");
  }
  const double nyquist = psd.frequencies.back();
  if (!(low_hz >= 0.0 && low_hz < high_hz && high_hz <= nyquist + 1e-9)) {
    throw InvalidInput("band_power: need 0 <= low < high <= nyquist");
  }
  const double df = psd.bin_width();
  BandPower out;
  std::size_t used = 0;
  for (std::size_t k = 0; k < psd.frequencies.size(); ++k) {
    const double f = psd.frequencies[k];
    if (f >= low_hz && f <= high_hz) {
      out.power += psd.power[k] * df;
      ++used;
    }
  }
  out.empty_band = used == 0;
  return out;
}

double region_beta_power(std::span<const PsdEstimate> per_channel, double low_hz,
                         double high_hz) {
  if (per_channel.empty()) throw InvalidInput("region_beta_power: no channels");
  const auto& grid = per_channel.front().frequencies;
  double total = 0.0;
  for (const auto& psd : per_channel) {
    if (psd.frequencies != grid) {
      throw InvalidInput("region_beta_power: channels have mismatched frequency grids");
    }
    total += band_power(psd, low_hz, high_hz).power;
  }
  return total / static_cast<double>(per_channel.size());
}

double ContextFeature::mean() const {
  if (beta_samples.empty()) return 0.0;
  return std::accumulate(beta_samples.begin(), beta_samples.end(), 0.0) /
         static_cast<double>(beta_samples.size());
}

int context_length(double window_seconds, double sample_interval) {
  if (!(window_seconds > 0.0) || !(sample_interval > 0.0) ||
      window_seconds < sample_interval * (1.0 - 1e-9)) {
    throw InvalidInput("context window needs T_w >= m > 0");
  }
  return static_cast<int>(std::lround(window_seconds / sample_interval));
}

ContextFeature build_context_window(std::span<const double> beta_stream,
                                    std::size_t start, double window_seconds,
                                    double sample_interval, double stream_interval) {
  const int l = context_length(window_seconds, sample_interval);
  if (!(stream_interval > 0.0)) throw InvalidInput("stream interval must be positive");
  const long stride = std::lround(sample_interval / stream_interval);
  if (stride < 1) throw InvalidInput("sample interval shorter than stream spacing");
  const std::size_t last = start + static_cast<std::size_t>(stride) * static_cast<std::size_t>(l - 1);
  if (last >= beta_stream.size()) {
    throw InvalidInput("build_context_window: stream too short for the window");
  }
  ContextFeature feature;
  feature.window_seconds = window_seconds;
  feature.sample_interval = sample_interval;
  feature.beta_samples.reserve(static_cast<std::size_t>(l));
  for (int i = 0; i < l; ++i) {
    const double v = beta_stream[start + static_cast<std::size_t>(stride * i)];
    if (v < 0.0) throw InvalidInput("build_context_window: negative beta power");
    feature.beta_samples.push_back(v);
  }
  return feature;
}

ArmContexts embed_context(const ContextFeature& feature, int arm_count) {
  if (arm_count < 1) throw InvalidInput("embed_context: arm count must be >= 1");
  const auto l = static_cast<Eigen::Index>(feature.size());
  ArmContexts out;
  out.arm_count = arm_count;
  out.vectors.reserve(static_cast<std::size_t>(arm_count));
  const Eigen::Map<const Eigen::VectorXd> s(feature.beta_samples.data(), l);
  for (int k = 0; k < arm_count; ++k) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(l * arm_count);
    x.segment(k * l, l) = s;
    out.vectors.push_back(std::move(x));
  }
  return out;
}

ArmContexts unit_normalized(ArmContexts contexts) {
  for (auto& x : contexts.vectors) {
    const double n = x.norm();
    if (n > 0.0) x /= n;
  }
  return contexts;
}

}  // namespace adbs
