#pragma once

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "paraling/corpus.hpp"
#include "paraling/rng.hpp"
#include "test_util.hpp"

namespace toycorpus {

namespace fs = std::filesystem;

/// Low tone (class "low") or high tone (class "high") plus noise.
inline paraling::AudioClip tone_clip(const std::string& id, bool high, double seconds, std::uint64_t seed,
                                     int rate = 16000) {
  paraling::Rng rng(seed, 3);
  paraling::AudioClip c;
  c.source_id = id;
  c.sample_rate_hz = rate;
  const double f = high ? 2500.0 : 300.0;
  const auto n = static_cast<std::size_t>(seconds * rate);
  for (std::size_t i = 0; i < n; ++i)
    c.samples.push_back(0.4 * std::sin(2 * std::numbers::pi * f * static_cast<double>(i) / rate) +
                        0.05 * rng.uniform(-1, 1));
  return c;
}

struct Corpus {
  fs::path audio;
  fs::path labels;
  fs::path config;
  std::vector<std::string> ids;
};

/// n clips alternating low/high in audio/, labels.csv with task "tone", and a
/// small config that keeps training fast.
inline Corpus write_tone_corpus(const fs::path& root, int n, double seconds = 0.5) {
  Corpus c;
  c.audio = root / "audio";
  fs::create_directories(c.audio);
  std::string labels = "id,tone\n";
  for (int i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "clip%02d", i);
    const bool high = i % 2 == 1;
    paraling::write_wav(c.audio / (std::string(id) + ".wav"), tone_clip(id, high, seconds, 100 + i));
    labels += std::string(id) + "," + (high ? "high" : "low") + "\n";
    c.ids.push_back(id);
  }
  c.labels = root / "labels.csv";
  testutil::write_text(c.labels, labels);
  c.config = root / "run.cfg";
  testutil::write_text(c.config,
                       "# toy tone task\n"
                       "dsp.n_fft = 512\n"
                       "dsp.hop = 256\n"
                       "dsp.n_mels = 16\n"
                       "corpus.segment = false\n"
                       "labels.tasks = tone\n"
                       "labels.classes.tone = low,high\n"
                       "net.conv_filters = 6\n"
                       "net.conv_kernel = 3\n"
                       "net.lstm_units = 6\n"
                       "net.ff_units = 6\n"
                       "train.epochs = 5\n"
                       "train.batch_size = 4\n"
                       "train.learning_rate = 0.01\n"
                       "ensemble.n_models = 2\n"
                       "ensemble.base_seed = 7\n");
  return c;
}

/// Runs the CLI and returns its exit status; output goes to log.
inline int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PARALING_CLI) + " " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace toycorpus
