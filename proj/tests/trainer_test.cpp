#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vtformer/datahub/synthetic.hpp"
#include "vtformer/errors.hpp"
#include "vtformer/numkit/tape.hpp"
#include "vtformer/trainer/trainer.hpp"

using namespace vtformer;
using num::Rng;
using num::Tape;
using num::Tensor;
using vtformer::testing::random_tensor;
using vtformer::testing::scratch_dir;

namespace {

train::TrainConfig tiny_config() {
  train::TrainConfig cfg;
  cfg.epochs = 3;
  cfg.d_model = 8;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.ffn = 16;
  cfg.t_oh = 5;
  cfg.t_ph = 5;
  cfg.batch_size = 2;
  cfg.seed = 11;
  return cfg;
}

std::vector<data::SceneWindow> synthetic(std::size_t scenes, int t_oh, int t_ph, int rate_hz = 5,
                                         std::uint64_t seed = 3) {
  data::SyntheticConfig s;
  s.n_scenes = scenes;
  s.t_oh = t_oh;
  s.t_ph = t_ph;
  s.rate_hz = rate_hz;
  s.seed = seed;
  return data::generate_synthetic(s);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(MseLoss, Examples) {
  Tape tape;
  const Tensor target({2, 2}, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(train::mse_loss(tape.constant(target), target).value()[0], 0.0);
  const Tensor shifted({2, 2}, std::vector<double>{2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(train::mse_loss(tape.constant(shifted), target).value()[0], 1.0);
  const Tensor one({2, 2}, std::vector<double>{1, 2, 3, 6});
  EXPECT_DOUBLE_EQ(train::mse_loss(tape.constant(one), target).value()[0], 1.0);
}

TEST(MseLoss, GradientMatchesFiniteDifferences) {
  Rng rng(7);
  const Tensor p0 = random_tensor({5, 2}, rng), target = random_tensor({5, 2}, rng);
  Tape tape;
  num::Var p = tape.variable(p0);
  tape.backward(train::mse_loss(p, target));
  const Tensor grad = p.grad();
  const double h = 1e-6;
  for (std::size_t i = 0; i < p0.size(); ++i) {
    Tensor up = p0, down = p0;
    up[i] += h;
    down[i] -= h;
    Tape t2;
    const double fu = train::mse_loss(t2.constant(up), target).value()[0];
    const double fd = train::mse_loss(t2.constant(down), target).value()[0];
    EXPECT_NEAR(grad[i], (fu - fd) / (2 * h), 1e-8);
    EXPECT_NEAR(grad[i], 2.0 * (p0[i] - target[i]) / 10.0, 1e-14);
  }
}

TEST(Baselines, ConstantVelocityIsExactOnConstantVelocityData) {
  const auto windows = synthetic(10, 15, 25);
  const auto r = metrics::evaluate(train::as_predictor(train::baseline_constant_velocity), windows, 5);
  EXPECT_LT(r.ade, 1e-9);
  EXPECT_LT(r.fde, 1e-9);
}

TEST(Baselines, StationaryVehiclesAreRepeated) {
  data::SceneWindow w;
  data::VehicleWindow v;
  v.observed = Tensor({4, 2});
  v.future = Tensor({6, 2});
  for (std::size_t k = 0; k < 4; ++k) v.observed(k, 0) = 2.5, v.observed(k, 1) = -1.0;
  w.vehicles.push_back(v);
  for (auto f : {train::baseline_constant_velocity, train::baseline_constant_position}) {
    const auto out = f(w);
    ASSERT_EQ(out.size(), 1u);
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_EQ(out[0].positions(k, 0), 2.5);
      EXPECT_EQ(out[0].positions(k, 1), -1.0);
      EXPECT_EQ(out[0].deltas(k, 0), 0.0);
    }
  }
}

TEST(Baselines, ConstantAccelerationClosedForm) {
  // With p(t) = v t + a t^2 / 2 sampled at dt, extrapolating the mean observed
  // step misses step j of the horizon by a dt^2 j (T_OH - 1 + j) / 2.
  const std::size_t t_oh = 15, t_ph = 25;
  const int rate = 5;
  data::VehicleMotion m;
  m.kind = data::Scenario::kConstantAcceleration;
  m.vx = 10;
  m.ax = 1;
  const Tensor all = data::sample_positions(m, t_oh + t_ph, rate);
  data::SceneWindow w;
  data::VehicleWindow v;
  v.observed = Tensor({t_oh, 2});
  v.future = Tensor({t_ph, 2});
  for (std::size_t k = 0; k < t_oh + t_ph; ++k)
    for (std::size_t c = 0; c < 2; ++c) (k < t_oh ? v.observed(k, c) : v.future(k - t_oh, c)) = all(k, c);
  w.vehicles.push_back(v);
  const double dt2 = 1.0 / (rate * rate);
  double ade_expected = 0;
  for (std::size_t j = 1; j <= t_ph; ++j)
    ade_expected += dt2 * static_cast<double>(j * (t_oh - 1 + j)) / 2.0 / static_cast<double>(t_ph);
  const double fde_expected = dt2 * static_cast<double>(t_ph * (t_oh - 1 + t_ph)) / 2.0;
  EXPECT_NEAR(fde_expected, 19.5, 1e-12);
  EXPECT_NEAR(ade_expected, 8.06, 1e-12);
  const data::SceneWindow ws[] = {w};
  const auto r = metrics::evaluate(train::as_predictor(train::baseline_constant_velocity), ws, rate);
  EXPECT_NEAR(r.ade, ade_expected, 1e-9);
  EXPECT_NEAR(r.fde, fde_expected, 1e-9);
}

TEST(Baselines, ConstantVelocityNeedsTwoObservations) {
  Rng rng(1);
  const auto w = vtformer::testing::random_scene(rng, 2, 1, 3);
  EXPECT_THROW(train::baseline_constant_velocity(w), ConfigError);
  EXPECT_NO_THROW(train::baseline_constant_position(w));
}

TEST(TrainConfigJson, CanonicalDefaults) {
  const train::TrainConfig cfg;
  const auto j = train::to_json(cfg);
  EXPECT_EQ(j.at("epochs"), 80);
  EXPECT_DOUBLE_EQ(j.at("lr").get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(j.at("weight_decay").get<double>(), 0.0005);
  EXPECT_DOUBLE_EQ(j.at("dropout").get<double>(), 0.2);
  EXPECT_EQ(j.at("batch_size"), 16);
  EXPECT_EQ(j.at("t_oh"), 15);
  EXPECT_EQ(j.at("t_ph"), 25);
  EXPECT_EQ(j.at("layers"), 8);
  EXPECT_EQ(j.at("heads"), 4);
  EXPECT_EQ(j.at("ffn"), 256);
}

TEST(TrainConfigJson, RoundTripAndRejection) {
  train::TrainConfig cfg = tiny_config();
  cfg.lr = 0.003;
  const auto back = train::train_config_from_json(train::to_json(cfg));
  EXPECT_EQ(train::to_json(back), train::to_json(cfg));
  EXPECT_THROW(train::train_config_from_json({{"learning_rate", 0.1}}), ConfigError);
  EXPECT_THROW(train::train_config_from_json({{"epochs", "many"}}), ConfigError);
  EXPECT_THROW(train::train_config_from_json({{"epochs", 0}}), ConfigError);
  EXPECT_THROW(train::train_config_from_json({{"d_model", 10}, {"heads", 4}}), ConfigError);
  EXPECT_THROW(train::train_config_from_json(nlohmann::json::array()), ConfigError);
}

TEST(HorizonLabel, Names) {
  EXPECT_EQ(train::horizon_label(15), "LH");
  EXPECT_EQ(train::horizon_label(10), "MH");
  EXPECT_EQ(train::horizon_label(5), "SH");
  EXPECT_EQ(train::horizon_label(7), "T_OH=7");
}

TEST(Train, DeterministicForFixedSeed) {
  const auto windows = synthetic(6, 5, 5);
  const auto d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
  const auto a = train::train(windows, windows, tiny_config(), {d1, {}});
  const auto b = train::train(windows, windows, tiny_config(), {d2, {}});
  ASSERT_EQ(a.record.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.record.epochs[e].train_loss, b.record.epochs[e].train_loss);
  }
  EXPECT_EQ(slurp(d1 / "final.ckpt.json"), slurp(d2 / "final.ckpt.json"));
  EXPECT_EQ(slurp(d1 / "best.ckpt.json"), slurp(d2 / "best.ckpt.json"));

  train::TrainConfig other = tiny_config();
  other.seed = 12;
  const auto c = train::train(windows, {}, other);
  EXPECT_NE(c.record.epochs[0].train_loss, a.record.epochs[0].train_loss);
}

TEST(Train, WritesRunLogAndCheckpoints) {
  const auto windows = synthetic(4, 5, 5);
  const auto dir = scratch_dir("runlog");
  train::TrainConfig cfg = tiny_config();
  cfg.eval_every = 1;
  int seen = 0;
  const auto res = train::train(windows, windows, cfg, {dir, [&](const train::EpochRecord&) { ++seen; }});
  EXPECT_EQ(seen, 3);
  std::ifstream in(dir / "run.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("epoch"), ++lines);
    EXPECT_TRUE(j.contains("eval"));
  }
  EXPECT_EQ(lines, 3);
  ASSERT_TRUE(res.record.best_eval_ade.has_value());
  double best = 1e300;
  for (const auto& e : res.record.epochs) best = std::min(best, e.eval->ade);
  EXPECT_EQ(*res.record.best_eval_ade, best);
  EXPECT_TRUE(std::filesystem::exists(dir / "best.ckpt.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "final.ckpt.json"));
}

TEST(Train, CheckpointReloadGivesIdenticalMetrics) {
  const auto windows = synthetic(4, 5, 5);
  const auto dir = scratch_dir("reload");
  const auto res = train::train(windows, {}, tiny_config(), {dir, {}});
  const auto loaded = model::VtFormer::load(dir / "final.ckpt.json");
  const auto a = metrics::evaluate(res.model, windows, 5);
  const auto b = metrics::evaluate(loaded, windows, 5);
  EXPECT_EQ(a.ade, b.ade);
  EXPECT_EQ(a.fde, b.fde);
  EXPECT_EQ(metrics::csv_row(a), metrics::csv_row(b));
}

TEST(Train, LossDecreasesOnConstantVelocityData) {
  const auto windows = synthetic(8, 5, 5);
  train::TrainConfig cfg = tiny_config();
  cfg.epochs = 15;
  cfg.dropout = 0.0;
  const auto res = train::train(windows, {}, cfg);
  EXPECT_LT(res.record.epochs.back().train_loss, 0.5 * res.record.epochs.front().train_loss);
}

TEST(Train, DivergenceReportsBatch) {
  auto windows = synthetic(3, 5, 5);
  for (auto& w : windows)
    for (auto& v : w.vehicles)
      for (std::size_t k = 0; k < 5; ++k) {
        v.observed(k, 0) = 1e200 * static_cast<double>(k);
        v.future(k, 0) = 1e200 * static_cast<double>(k + 5);
      }
  train::TrainConfig cfg = tiny_config();
  cfg.normalize = false;
  try {
    train::train(windows, {}, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.batch(), 0u);
    EXPECT_NE(std::string(e.what()).find("batch 0"), std::string::npos);
  }
}

TEST(Train, DivergenceFromExplodingStepSize) {
  const auto windows = synthetic(4, 5, 5);
  train::TrainConfig cfg = tiny_config();
  cfg.normalize = false;
  cfg.lr = 1e200;
  cfg.batch_size = 1;
  cfg.epochs = 5;
  try {
    train::train(windows, {}, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    // The first update is finite; things blow up afterwards.
    EXPECT_GE(e.batch(), 1u);
    EXPECT_LT(e.batch(), 20u);
  }
}

TEST(Train, RejectsEmptyTrainingSet) {
  EXPECT_THROW(train::train({}, {}, tiny_config()), ConfigError);
}

TEST(Sweep, ThreeHorizonsAndCsvLayout) {
  for (int rate : {5, 10}) {
    train::TrainConfig base = tiny_config();
    base.epochs = 1;
    base.t_ph = 25;
    base.rate_hz = rate;
    const auto rows = train::horizon_sweep(
        [rate](int t_oh) {
          const auto w = synthetic(3, t_oh, 25, rate);
          return data::split(w, 0.6, 0);
        },
        base);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].label, "LH");
    EXPECT_EQ(rows[1].label, "MH");
    EXPECT_EQ(rows[2].label, "SH");
    EXPECT_GT(*rows[0].report.params, *rows[1].report.params);
    EXPECT_GT(*rows[1].report.params, *rows[2].report.params);
    const std::string csv = train::sweep_csv(rows);
    const std::string header = csv.substr(0, csv.find('\n'));
    EXPECT_EQ(header, rate == 5 ? "model,ADE,FDE,1s,2s,3s,4s,5s,Params"
                                : "model,ADE,FDE,0.5s,1.0s,1.5s,2.0s,2.5s,Params");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_EQ(csv.substr(header.size() + 1, 3), "LH,");
  }
}
