#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "paraling/corpus.hpp"
#include "paraling/matrix.hpp"

namespace paraling {

enum class WindowFn { Hann, Rectangular };

struct DspConfig {
  int expected_sample_rate_hz = 16000;
  int n_fft = 2048;
  int hop = 512;
  WindowFn window_fn = WindowFn::Hann;
  int n_mels = 64;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0 selects Nyquist
  double preemphasis_h = 1.0;
  int butterworth_order = 5;
  double butterworth_cutoff_hz = 400.0;
  double log_floor = 1e-10;

  double resolved_fmax(int sample_rate_hz) const {
    return fmax_hz > 0.0 ? fmax_hz : 0.5 * sample_rate_hz;
  }
  /// Throws InvalidConfig when the invariants do not hold for this rate.
  void validate(int sample_rate_hz) const;
};

/// frames x bands feature matrix. Log-Mel spectrograms, lowest-k slices
/// and raw-sample frames all use this carrier.
struct FeatureMatrix {
  Matrix values;
  double frame_rate_hz = 0.0;
  std::vector<double> band_centers_hz;

  std::size_t frames() const { return values.rows(); }
  std::size_t bands() const { return values.cols(); }
};

using MelSpectrogram = FeatureMatrix;

struct FilterBank {
  Matrix weights;  // n_mels x (n_fft/2 + 1)
  std::vector<double> centers_hz;
};

/// One second-order section, a0 normalized to 1. First-order sections have b2 = a2 = 0.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

std::vector<double> preemphasize(std::span<const double> signal, double h);

/// Digital Butterworth low-pass as cascaded sections, bilinear transform with
/// prewarping so |H(cutoff)| = 1/sqrt(2) exactly.
std::vector<Biquad> design_butterworth_lowpass(int order, double cutoff_hz, int sample_rate_hz);

/// Runs the cascade with zero initial state (transposed direct form II).
std::vector<double> apply_sections(std::span<const double> signal, std::span<const Biquad> sections);

/// Complex frequency response of a cascade at f_hz.
std::complex<double> frequency_response(std::span<const Biquad> sections, double f_hz,
                                        int sample_rate_hz);

std::vector<double> butterworth_lowpass(std::span<const double> signal, int order, double cutoff_hz,
                                        int sample_rate_hz);

/// HTK Mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

FilterBank mel_filterbank(const DspConfig& config, int sample_rate_hz);

std::vector<double> window(WindowFn fn, int n);

/// In-place FFT; radix-2 for power-of-two sizes, direct DFT otherwise.
void fft(std::vector<std::complex<double>>& x);

/// |X_k|^2 for k = 0..n/2 of the n-point DFT of frame (unnormalized).
std::vector<double> power_spectrum(std::span<const double> frame);

MelSpectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& config);

/// Variant reusing a prebuilt bank (shared across threads).
MelSpectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& config, const FilterBank& bank);

MelSpectrogram lowest_k_bands(const MelSpectrogram& spec, int k);

/// Preemphasis followed by the Butterworth low-pass, both from config.
AudioClip preprocess_low_freq(const AudioClip& clip, const DspConfig& config);

/// Non-overlapping frames of frame_len raw samples (trailing remainder dropped);
/// the raw-audio input path for sequence regression.
FeatureMatrix frame_raw(const AudioClip& clip, int frame_len);

}  // namespace paraling
