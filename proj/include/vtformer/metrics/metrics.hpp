#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtformer/datahub/windows.hpp"
#include "vtformer/numkit/tensor.hpp"

namespace vtformer::model {
class VtFormer;
}

namespace vtformer::metrics {

// All three take N x T x 2 tensors (a T x 2 tensor counts as N = 1).
double ade(const num::Tensor& pred, const num::Tensor& gt);
double fde(const num::Tensor& pred, const num::Tensor& gt);
// `step` is 1-based.
double rmse_at(const num::Tensor& pred, const num::Tensor& gt, std::size_t step);

struct HorizonMark {
  std::size_t step = 0;  // 1-based
  double seconds = 0.0;
  std::string label;     // "1s", "0.5s", ...
};

// Every fifth step up to T_PH, at most five marks: 1s..5s at 5 Hz and
// 0.5s..2.5s at 10 Hz for T_PH = 25. Horizons shorter than five steps get a
// single mark at T_PH.
std::vector<HorizonMark> horizon_marks(int rate_hz, std::size_t t_ph);

struct HorizonRmse {
  HorizonMark mark;
  double rmse = 0.0;
};

struct MetricsReport {
  double ade = 0.0;
  double fde = 0.0;
  std::vector<HorizonRmse> rmse_at;
  std::size_t n_vehicles = 0;
  data::Unit unit = data::Unit::kMeters;
  int rate_hz = 5;
  std::optional<std::size_t> params;
};

nlohmann::json to_json(const MetricsReport& r);
// "ADE,FDE,<marks...>[,Params]"
std::string csv_header(const MetricsReport& r);
std::string csv_row(const MetricsReport& r);
// "seconds,rmse" then one row per mark.
std::string rmse_plot_csv(const MetricsReport& r);

// Absolute T_PH x 2 positions for each vehicle of a scene, in scene order.
using ScenePredictor = std::function<std::vector<num::Tensor>(const data::SceneWindow&)>;

// Stacks every vehicle of every window into one N x T_PH x 2 pair and
// computes the metrics over the whole set.
MetricsReport evaluate(const ScenePredictor& predictor, std::span<const data::SceneWindow> windows,
                       int rate_hz);
MetricsReport evaluate(const model::VtFormer& model, std::span<const data::SceneWindow> windows,
                       int rate_hz);

}  // namespace vtformer::metrics
