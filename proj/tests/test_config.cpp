#include <doctest.h>

#include "paraling/config.hpp"
#include "paraling/error.hpp"
#include "test_util.hpp"

using namespace paraling;

TEST_CASE("defaults cover every module") {
  RunConfig cfg;
  CHECK(cfg.get_int("dsp.n_fft") == 2048);
  CHECK(cfg.get_int("dsp.hop") == 512);
  CHECK(cfg.get_double("dsp.butterworth_cutoff_hz") == 400.0);
  CHECK(cfg.get_int("dsp.butterworth_order") == 5);
  CHECK(cfg.get_double("dsp.preemphasis_h") == 1.0);
  CHECK(cfg.get_int("dsp.low_freq_k") == 10);
  CHECK(cfg.get_int("net.conv_filters") == 100);
  CHECK(cfg.get_int("net.lstm_units") == 100);
  CHECK(cfg.get_int("net.ff_units") == 100);
  CHECK(cfg.get_int("net.conv_kernel") == 5);
  CHECK(cfg.get_double("train.mse_weight") == 0.1);
  CHECK(cfg.get_int("ensemble.n_models") == 10);
  CHECK(cfg.get_int("sampler.max_rejects") == 100);
  CHECK(cfg.get_double("corpus.window_s") == 4.0);
  const auto t = train_config(cfg);
  CHECK(t.learning_rate == 1e-3);
  CHECK(t.batch_size == 16);
  CHECK(t.grad_clip == 5.0);
  CHECK(t.optimizer == OptimizerKind::Adam);
}

TEST_CASE("unknown keys are rejected") {
  RunConfig cfg;
  CHECK_ERROR_CODE(cfg.set("train.epoch", "3"), ErrorCode::InvalidConfig);
  CHECK_ERROR_CODE(cfg.merge_text("net.units = 4\n"), ErrorCode::InvalidConfig);
  CHECK_ERROR_CODE(cfg.merge_text("just words\n"), ErrorCode::InvalidConfig);
  CHECK_ERROR_CODE(cfg.set_assignment("novalue"), ErrorCode::InvalidConfig);
  CHECK_ERROR_CODE(cfg.set("labels.classes.", "a,b"), ErrorCode::InvalidConfig);
  cfg.set("labels.classes.mood", "sad,happy");
  CHECK(cfg.get_list("labels.classes.mood") == std::vector<std::string>{"sad", "happy"});
}

TEST_CASE("precedence: defaults < file < overrides") {
  testutil::TempDir dir("cfg");
  testutil::write_text(dir / "a.cfg", "train.epochs = 7   # comment\n\n# full line\ntrain.batch_size=3\n");
  RunConfig cfg;
  cfg.merge_file(dir / "a.cfg");
  cfg.set_assignment("train.epochs = 9");
  CHECK(cfg.get_int("train.epochs") == 9);
  CHECK(cfg.get_int("train.batch_size") == 3);
  CHECK(cfg.get_int("net.lstm_units") == 100);
  CHECK_ERROR_CODE(cfg.merge_file(dir / "missing.cfg"), ErrorCode::InvalidConfig);
}

TEST_CASE("dump is sorted and reproduces the config") {
  RunConfig cfg;
  cfg.set("sampler.mode", "probabilistic");
  cfg.set("sampler.lambda", "0.6");
  cfg.set("labels.classes.A", "low,medium,high");
  const std::string d = cfg.dump();
  CHECK(d.find("sampler.lambda = 0.6\n") != std::string::npos);
  CHECK(d.find("sampler.seed = 0\n") != std::string::npos);
  CHECK(d.find("ensemble.base_seed = 0\n") != std::string::npos);
  CHECK(d.find("train.shuffle_seed = 0\n") != std::string::npos);
  CHECK(d.find("corpus.hop_s") < d.find("dsp.hop"));
  RunConfig again;
  again.merge_text(d);
  CHECK(again.dump() == d);
}

TEST_CASE("typed getters reject malformed values") {
  RunConfig cfg;
  cfg.set("train.epochs", "ten");
  CHECK_ERROR_CODE(cfg.get_int("train.epochs"), ErrorCode::InvalidConfig);
  cfg.set("corpus.pad_last", "maybe");
  CHECK_ERROR_CODE(cfg.get_bool("corpus.pad_last"), ErrorCode::InvalidConfig);
  cfg.set("ensemble.base_seed", "-1");
  CHECK_ERROR_CODE(cfg.get_u64("ensemble.base_seed"), ErrorCode::InvalidConfig);
}

TEST_CASE("builders validate their sections") {
  RunConfig cfg;
  cfg.set("sampler.lambda", "1.5");
  CHECK_ERROR_CODE(sampler_config(cfg), ErrorCode::InvalidConfig);
  cfg.set("sampler.lambda", "0.6");
  cfg.set("sampler.mode", "smote");
  CHECK_ERROR_CODE(sampler_config(cfg), ErrorCode::InvalidConfig);
  cfg.set("sampler.mode", "probabilistic");
  const auto s = sampler_config(cfg);
  CHECK(s.mode == SamplerMode::Probabilistic);
  CHECK(s.lambda == 0.6);

  cfg.set("dsp.hop", "4096");
  CHECK_ERROR_CODE(dsp_config(cfg), ErrorCode::InvalidConfig);
  cfg.set("dsp.hop", "512");
  cfg.set("dsp.fmax_hz", "9000");
  CHECK_ERROR_CODE(dsp_config(cfg), ErrorCode::InvalidConfig);
  cfg.set("dsp.fmax_hz", "0");
  cfg.set("train.epochs", "0");
  CHECK_ERROR_CODE(train_config(cfg), ErrorCode::InvalidConfig);
}

TEST_CASE("label schema and architecture from config") {
  RunConfig cfg;
  CHECK_ERROR_CODE(label_schema(cfg), ErrorCode::InvalidConfig);
  cfg.set("labels.tasks", "A,V");
  cfg.set("labels.classes.A", "low,medium,high");
  CHECK_ERROR_CODE(label_schema(cfg), ErrorCode::InvalidConfig);
  cfg.set("labels.classes.V", "low,medium,high");
  const auto schema = label_schema(cfg);
  REQUIRE(schema.class_columns.size() == 2);
  CHECK(schema.class_columns[1].classes.at("medium") == 1);
  const auto arch = architecture(cfg, 200);
  REQUIRE(arch.heads.size() == 2);
  CHECK(arch.heads[0].name == "A");
  CHECK(arch.heads[0].n_classes == 3);
  CHECK(arch.input_bands == 200);
  CHECK(segmentation_enabled(cfg));

  RunConfig reg;
  reg.set("labels.target_column", "belt");
  CHECK_ERROR_CODE(label_schema(reg), ErrorCode::InvalidConfig);
  reg.set("labels.rate_column", "rate");
  reg.set("train.loss", "corr_plus_mse");
  const auto a = architecture(reg, 640);
  REQUIRE(a.heads.size() == 1);
  CHECK(a.heads[0].kind == HeadKind::RegressionSequence);
  const auto t = train_config(reg);
  CHECK(t.losses.at("target").kind == LossKind::CorrPlusMse);
  CHECK(t.losses.at("target").weight == 0.1);
  CHECK_FALSE(segmentation_enabled(reg));
  reg.set("train.loss", "cross_entropy");
  CHECK_ERROR_CODE(train_config(reg), ErrorCode::InvalidConfig);
}
