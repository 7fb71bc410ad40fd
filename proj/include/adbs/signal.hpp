#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace adbs {

struct SampledSignal {
  std::vector<double> samples;
  double sample_rate = 0.0;  // Hz
};

enum class Taper { kRectangular, kHann };

// One-sided PSD on the grid k * sample_rate / N, k = 0 .. N/2.
struct PsdEstimate {
  std::vector<double> frequencies;  // Hz, ascending from 0
  std::vector<double> power;        // power per Hz

  double bin_width() const {
    return frequencies.size() > 1 ? frequencies[1] - frequencies[0] : 0.0;
  }
};

// Single-segment periodogram with the given taper, normalized by the taper
// energy so that the sum of bins times the bin width approximates the mean
// square of the input. DC and (for even N) Nyquist bins are not doubled.
PsdEstimate estimate_psd(const SampledSignal& signal, Taper taper);

struct BandPower {
  double power = 0.0;
  bool empty_band = false;  // no bin centre fell inside [low, high]
};

// Rectangle-rule integral over bins whose centre lies in [low_hz, high_hz].
BandPower band_power(const PsdEstimate& psd, double low_hz, double high_hz);

inline constexpr double kBetaLowHz = 13.0;
inline constexpr double kBetaHighHz = 35.0;

// Mean beta-band power over channels that share one frequency grid.
double region_beta_power(std::span<const PsdEstimate> per_channel,
                         double low_hz = kBetaLowHz,
                         double high_hz = kBetaHighHz);

// l = round(window_seconds / sample_interval) beta-power values sampled every
// sample_interval seconds.
struct ContextFeature {
  std::vector<double> beta_samples;
  double window_seconds = 0.0;
  double sample_interval = 0.0;

  std::size_t size() const { return beta_samples.size(); }
  double mean() const;
};

int context_length(double window_seconds, double sample_interval);

// Picks [beta(t), beta(t+m), ..., beta(t+T_w-m)] from a stream whose entries
// are stream_interval seconds apart (stride = round(m / stream_interval)).
ContextFeature build_context_window(std::span<const double> beta_stream,
                                    std::size_t start, double window_seconds,
                                    double sample_interval,
                                    double stream_interval);

// Block embedding: vector k carries the feature in block k, zeros elsewhere.
struct ArmContexts {
  std::vector<Eigen::VectorXd> vectors;
  int arm_count = 0;

  const Eigen::VectorXd& operator[](std::size_t k) const { return vectors[k]; }
};

ArmContexts embed_context(const ContextFeature& feature, int arm_count);
// Scales every arm vector to unit Euclidean norm (zero vectors are left as is).
ArmContexts unit_normalized(ArmContexts contexts);

}  // namespace adbs
