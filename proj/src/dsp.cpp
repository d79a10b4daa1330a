#include "paraling/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "paraling/error.hpp"

namespace paraling {

using std::numbers::pi;

void DspConfig::validate(int sample_rate_hz) const {
  const std::string ctx = "dsp config: ";
  require(n_fft > 0 && hop > 0, ErrorCode::InvalidConfig, ctx + "n_fft and hop must be positive");
  require(hop <= n_fft, ErrorCode::InvalidConfig, ctx + "hop must not exceed n_fft");
  require(n_mels > 0, ErrorCode::InvalidConfig, ctx + "n_mels must be positive");
  require(log_floor > 0.0, ErrorCode::InvalidConfig, ctx + "log_floor must be positive");
  const double fmax = resolved_fmax(sample_rate_hz);
  require(fmin_hz >= 0.0 && fmin_hz < fmax && fmax <= 0.5 * sample_rate_hz,
          ErrorCode::InvalidConfig, ctx + "need 0 <= fmin < fmax <= sample_rate/2");
}

std::vector<double> preemphasize(std::span<const double> signal, double h) {
  require(!signal.empty(), ErrorCode::EmptyClip, "preemphasize: empty signal");
  std::vector<double> out(signal.size());
  out[0] = signal[0];
  for (std::size_t n = 1; n < signal.size(); ++n) out[n] = signal[n] - h * signal[n - 1];
  return out;
}

std::vector<Biquad> design_butterworth_lowpass(int order, double cutoff_hz, int sample_rate_hz) {
  require(order >= 1, ErrorCode::InvalidArgument, "butterworth order must be >= 1");
  require(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz, ErrorCode::CutoffOutOfRange,
          "cutoff " + std::to_string(cutoff_hz) + " Hz outside (0, " +
              std::to_string(0.5 * sample_rate_hz) + ")");
  // Prewarped analog cutoff, normalized so the prototype sits on the unit circle.
  const double w = std::tan(pi * cutoff_hz / sample_rate_hz);
  const double w2 = w * w;
  std::vector<Biquad> sections;
  for (int k = 1; k <= order / 2; ++k) {
    // Conjugate pole pair: s^2 + q s + 1 with q = 2 sin((2k-1) pi / 2n).
    const double q = 2.0 * std::sin((2.0 * k - 1.0) * pi / (2.0 * order));
    const double a0 = 1.0 + q * w + w2;
    Biquad s;
    s.b0 = w2 / a0;
    s.b1 = 2.0 * w2 / a0;
    s.b2 = w2 / a0;
    s.a1 = (2.0 * w2 - 2.0) / a0;
    s.a2 = (1.0 - q * w + w2) / a0;
    sections.push_back(s);
  }
  if (order % 2 == 1) {
    const double a0 = 1.0 + w;
    Biquad s;
    s.b0 = w / a0;
    s.b1 = w / a0;
    s.a1 = (w - 1.0) / a0;
    sections.push_back(s);
  }
  return sections;
}

std::vector<double> apply_sections(std::span<const double> signal, std::span<const Biquad> sections) {
  std::vector<double> y(signal.begin(), signal.end());
  for (const auto& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double x = v;
      const double out = s.b0 * x + z1;
      z1 = s.b1 * x - s.a1 * out + z2;
      z2 = s.b2 * x - s.a2 * out;
      v = out;
    }
  }
  return y;
}

std::complex<double> frequency_response(std::span<const Biquad> sections, double f_hz,
                                        int sample_rate_hz) {
  const std::complex<double> z1 = std::polar(1.0, -2.0 * pi * f_hz / sample_rate_hz);
  const std::complex<double> z2 = z1 * z1;
  std::complex<double> h = 1.0;
  for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return h;
}

std::vector<double> butterworth_lowpass(std::span<const double> signal, int order, double cutoff_hz,
                                        int sample_rate_hz) {
  const auto sections = design_butterworth_lowpass(order, cutoff_hz, sample_rate_hz);
  return apply_sections(signal, sections);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

FilterBank mel_filterbank(const DspConfig& config, int sample_rate_hz) {
  config.validate(sample_rate_hz);
  const int n_bins = config.n_fft / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate_hz) / config.n_fft;
  const double mel_lo = hz_to_mel(config.fmin_hz);
  const double mel_hi = hz_to_mel(config.resolved_fmax(sample_rate_hz));

  std::vector<double> edges(static_cast<std::size_t>(config.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(edges.size() - 1));
  for (std::size_t i = 1; i < edges.size(); ++i) {
    // Points closer than one bin would leave some filter with no support.
    require(edges[i] - edges[i - 1] >= bin_hz, ErrorCode::TooManyFilters,
            std::to_string(config.n_mels) + " filters need spacing >= " + std::to_string(bin_hz) +
                " Hz but points " + std::to_string(i - 1) + "," + std::to_string(i) + " are " +
                std::to_string(edges[i] - edges[i - 1]) + " Hz apart; increase n_fft");
  }

  FilterBank bank;
  bank.weights = Matrix(static_cast<std::size_t>(config.n_mels), static_cast<std::size_t>(n_bins));
  bank.centers_hz.assign(edges.begin() + 1, edges.end() - 1);
  for (int m = 0; m < config.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = k * bin_hz;
      double wgt = 0.0;
      if (f > lo && f <= mid)
        wgt = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        wgt = (hi - f) / (hi - mid);
      bank.weights(m, k) = wgt;
    }
  }
  return bank;
}

std::vector<double> window(WindowFn fn, int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (fn == WindowFn::Hann)
    for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * i / n);  // periodic
  return w;
}

void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (n <= 1) return;
  if ((n & (n - 1)) != 0) {
    std::vector<std::complex<double>> out(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t t = 0; t < n; ++t)
        acc += x[t] * std::polar(1.0, -2.0 * pi * static_cast<double>((k * t) % n) / n);
      out[k] = acc;
    }
    x = std::move(out);
    return;
  }
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * pi / static_cast<double>(len);
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> w = std::polar(1.0, ang * static_cast<double>(k));
        const auto u = x[i + k];
        const auto v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
      }
    }
  }
}

std::vector<double> power_spectrum(std::span<const double> frame) {
  std::vector<std::complex<double>> buf(frame.begin(), frame.end());
  fft(buf);
  std::vector<double> p(frame.size() / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& config) {
  require(clip.sample_rate_hz == config.expected_sample_rate_hz, ErrorCode::SampleRateMismatch,
          clip.source_id + ": rate " + std::to_string(clip.sample_rate_hz) + " != configured " +
              std::to_string(config.expected_sample_rate_hz));
  return mel_spectrogram(clip, config, mel_filterbank(config, clip.sample_rate_hz));
}

MelSpectrogram mel_spectrogram(const AudioClip& clip, const DspConfig& config, const FilterBank& bank) {
  require(clip.sample_rate_hz == config.expected_sample_rate_hz, ErrorCode::SampleRateMismatch,
          clip.source_id + ": rate " + std::to_string(clip.sample_rate_hz) + " != configured " +
              std::to_string(config.expected_sample_rate_hz));
  const auto n_fft = static_cast<std::size_t>(config.n_fft);
  const auto hop = static_cast<std::size_t>(config.hop);
  require(clip.samples.size() >= n_fft, ErrorCode::ClipTooShort,
          clip.source_id + ": " + std::to_string(clip.samples.size()) + " samples < n_fft " +
              std::to_string(n_fft));
  require(bank.weights.cols() == n_fft / 2 + 1, ErrorCode::ShapeMismatch,
          "filterbank does not match n_fft");

  const std::size_t frames = 1 + (clip.samples.size() - n_fft) / hop;
  const auto win = window(config.window_fn, config.n_fft);
  const double floor_log = std::log(config.log_floor);

  MelSpectrogram spec;
  spec.values = Matrix(frames, bank.weights.rows());
  spec.frame_rate_hz = static_cast<double>(clip.sample_rate_hz) / config.hop;
  spec.band_centers_hz = bank.centers_hz;

  std::vector<double> frame(n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = clip.samples[t * hop + i] * win[i];
    const auto power = power_spectrum(frame);
    for (std::size_t m = 0; m < bank.weights.rows(); ++m) {
      const auto w = bank.weights.row(m);
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += w[k] * power[k];
      spec.values(t, m) = e > config.log_floor ? std::log(e) : floor_log;
    }
  }
  return spec;
}

MelSpectrogram lowest_k_bands(const MelSpectrogram& spec, int k) {
  require(k >= 1 && static_cast<std::size_t>(k) <= spec.bands(), ErrorCode::KOutOfRange,
          "k=" + std::to_string(k) + " with " + std::to_string(spec.bands()) + " bands");
  MelSpectrogram out;
  out.frame_rate_hz = spec.frame_rate_hz;
  out.values = Matrix(spec.frames(), static_cast<std::size_t>(k));
  for (std::size_t t = 0; t < spec.frames(); ++t)
    for (int b = 0; b < k; ++b) out.values(t, b) = spec.values(t, b);
  out.band_centers_hz.assign(spec.band_centers_hz.begin(), spec.band_centers_hz.begin() + k);
  return out;
}

AudioClip preprocess_low_freq(const AudioClip& clip, const DspConfig& config) {
  AudioClip out;
  out.sample_rate_hz = clip.sample_rate_hz;
  out.source_id = clip.source_id;
  out.samples = butterworth_lowpass(preemphasize(clip.samples, config.preemphasis_h),
                                    config.butterworth_order, config.butterworth_cutoff_hz,
                                    clip.sample_rate_hz);
  return out;
}

FeatureMatrix frame_raw(const AudioClip& clip, int frame_len) {
  require(frame_len > 0, ErrorCode::InvalidArgument, "frame length must be positive");
  const auto len = static_cast<std::size_t>(frame_len);
  const std::size_t frames = clip.samples.size() / len;
  require(frames > 0, ErrorCode::ClipTooShort, clip.source_id + ": shorter than one raw frame");
  FeatureMatrix out;
  out.values = Matrix(frames, len);
  std::copy_n(clip.samples.begin(), frames * len, out.values.data().begin());
  out.frame_rate_hz = static_cast<double>(clip.sample_rate_hz) / frame_len;
  out.band_centers_hz.resize(len);
  for (std::size_t i = 0; i < len; ++i) out.band_centers_hz[i] = static_cast<double>(i);
  return out;
}

}  // namespace paraling
