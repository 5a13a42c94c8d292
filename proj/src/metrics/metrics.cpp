#include "vtformer/metrics/metrics.hpp"

#include <cmath>

#include "vtformer/errors.hpp"
#include "vtformer/model/vtformer.hpp"
#include "vtformer/numkit/format.hpp"

namespace vtformer::metrics {

using num::Tensor;

namespace {

struct View {
  std::size_t n = 0;
  std::size_t t = 0;
};

View check_pair(const Tensor& pred, const Tensor& gt, const char* what) {
  if (pred.shape() != gt.shape()) {
    throw ShapeError(std::string(what) + ": pred " + num::shape_string(pred.shape()) + " vs gt " +
                     num::shape_string(gt.shape()));
  }
  const num::Shape& s = pred.shape();
  View v;
  if (s.size() == 3 && s[2] == 2) {
    v = {s[0], s[1]};
  } else if (s.size() == 2 && s[1] == 2) {
    v = {1, s[0]};
  } else {
    throw ShapeError(std::string(what) + ": expected N x T x 2, got " + num::shape_string(s));
  }
  if (v.n == 0 || v.t == 0) throw ShapeError(std::string(what) + ": empty input");
  return v;
}

double point_distance(const Tensor& pred, const Tensor& gt, std::size_t offset) {
  return std::hypot(pred[offset] - gt[offset], pred[offset + 1] - gt[offset + 1]);
}

}  // namespace

double ade(const Tensor& pred, const Tensor& gt) {
  const View v = check_pair(pred, gt, "ade");
  double total = 0.0;
  for (std::size_t p = 0; p < v.n * v.t; ++p) total += point_distance(pred, gt, 2 * p);
  return total / static_cast<double>(v.n * v.t);
}

double fde(const Tensor& pred, const Tensor& gt) {
  const View v = check_pair(pred, gt, "fde");
  double total = 0.0;
  for (std::size_t i = 0; i < v.n; ++i) total += point_distance(pred, gt, 2 * (i * v.t + v.t - 1));
  return total / static_cast<double>(v.n);
}

double rmse_at(const Tensor& pred, const Tensor& gt, std::size_t step) {
  const View v = check_pair(pred, gt, "rmse_at");
  if (step < 1 || step > v.t) {
    throw ConfigError("rmse_at: step " + std::to_string(step) + " outside 1.." + std::to_string(v.t));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < v.n; ++i) {
    const double d = point_distance(pred, gt, 2 * (i * v.t + step - 1));
    total += d * d;
  }
  return std::sqrt(total / static_cast<double>(v.n));
}

std::vector<HorizonMark> horizon_marks(int rate_hz, std::size_t t_ph) {
  if (rate_hz < 1) throw ConfigError("rate must be positive, got " + std::to_string(rate_hz));
  if (t_ph < 1) throw ConfigError("prediction horizon must be positive");
  constexpr std::size_t kEvery = 5;
  constexpr std::size_t kMaxMarks = 5;
  std::vector<std::size_t> steps;
  for (std::size_t s = kEvery; s <= t_ph && steps.size() < kMaxMarks; s += kEvery) steps.push_back(s);
  if (steps.empty()) steps.push_back(t_ph);

  // Integer-second marks print as "1s"; anything finer keeps one decimal.
  bool whole = true;
  for (std::size_t s : steps) whole = whole && s % static_cast<std::size_t>(rate_hz) == 0;
  std::vector<HorizonMark> marks;
  for (std::size_t s : steps) {
    HorizonMark m;
    m.step = s;
    m.seconds = static_cast<double>(s) / rate_hz;
    char buf[32];
    std::snprintf(buf, sizeof buf, whole ? "%.0fs" : "%.1fs", m.seconds);
    m.label = buf;
    marks.push_back(std::move(m));
  }
  return marks;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json rmse = nlohmann::json::array();
  for (const auto& h : r.rmse_at) {
    rmse.push_back({{"label", h.mark.label}, {"seconds", h.mark.seconds}, {"step", h.mark.step},
                    {"rmse", h.rmse}});
  }
  nlohmann::json j = {{"ade", r.ade},
                      {"fde", r.fde},
                      {"rmse_at", rmse},
                      {"n_vehicles", r.n_vehicles},
                      {"unit", data::to_string(r.unit)},
                      {"rate_hz", r.rate_hz}};
  if (r.params) j["params"] = *r.params;
  return j;
}

std::string csv_header(const MetricsReport& r) {
  std::string out = "ADE,FDE";
  for (const auto& h : r.rmse_at) out += "," + h.mark.label;
  if (r.params) out += ",Params";
  return out;
}

std::string csv_row(const MetricsReport& r) {
  std::string out = num::format_double(r.ade) + "," + num::format_double(r.fde);
  for (const auto& h : r.rmse_at) out += "," + num::format_double(h.rmse);
  if (r.params) out += "," + std::to_string(*r.params);
  return out;
}

std::string rmse_plot_csv(const MetricsReport& r) {
  std::string out = "seconds,rmse\n";
  for (const auto& h : r.rmse_at) out += num::format_double(h.mark.seconds) + "," + num::format_double(h.rmse) + "\n";
  return out;
}

MetricsReport evaluate(const ScenePredictor& predictor, std::span<const data::SceneWindow> windows,
                       int rate_hz) {
  if (windows.empty()) throw ConfigError("evaluate: empty dataset");
  const std::size_t t_ph = windows.front().t_ph();
  std::size_t n = 0;
  for (const auto& w : windows) {
    if (w.t_ph() != t_ph) throw ConfigError("evaluate: windows disagree on T_PH");
    n += w.vehicles.size();
  }
  if (n == 0) throw ConfigError("evaluate: dataset has no vehicles");

  Tensor pred({n, t_ph, 2});
  Tensor gt({n, t_ph, 2});
  std::size_t i = 0;
  for (const auto& w : windows) {
    const std::vector<Tensor> out = predictor(w);
    if (out.size() != w.vehicles.size()) {
      throw ShapeError("evaluate: predictor returned " + std::to_string(out.size()) +
                       " trajectories for " + std::to_string(w.vehicles.size()) + " vehicles");
    }
    for (std::size_t v = 0; v < out.size(); ++v, ++i) {
      if (out[v].shape() != num::Shape{t_ph, 2}) {
        throw ShapeError("evaluate: prediction shape " + num::shape_string(out[v].shape()));
      }
      std::copy(out[v].data().begin(), out[v].data().end(), pred.data().begin() + 2 * t_ph * i);
      const auto& f = w.vehicles[v].future.data();
      std::copy(f.begin(), f.end(), gt.data().begin() + 2 * t_ph * i);
    }
  }

  MetricsReport r;
  r.ade = ade(pred, gt);
  r.fde = fde(pred, gt);
  for (const HorizonMark& m : horizon_marks(rate_hz, t_ph)) r.rmse_at.push_back({m, rmse_at(pred, gt, m.step)});
  r.n_vehicles = n;
  r.unit = windows.front().unit;
  r.rate_hz = rate_hz;
  return r;
}

MetricsReport evaluate(const model::VtFormer& model, std::span<const data::SceneWindow> windows,
                       int rate_hz) {
  MetricsReport r = evaluate(
      [&model](const data::SceneWindow& w) {
        std::vector<Tensor> out;
        for (auto& p : model.predict(w)) out.push_back(std::move(p.positions));
        return out;
      },
      windows, rate_hz);
  r.params = model.param_count();
  return r;
}

}  // namespace vtformer::metrics
